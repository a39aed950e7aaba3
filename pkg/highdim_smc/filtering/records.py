import csv
import logging
from dataclasses import dataclass

import numpy as np

from highdim_smc.exceptions import ArgumentError

logger = logging.getLogger(__name__)

SEED_PREFIX = "# seed = "


@dataclass
class ObservationRecord:
    """
    A simulated observation sequence and the seed that produced it.
    """

    observations: np.ndarray
    seed: int = None

    def __len__(self):
        return len(self.observations)


def write_observations(path, record):
    """
    Write ``time,y`` rows (time is 1-based), preceded by a seed comment when the seed is known.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if record.seed is not None:
            handle.write(f"{SEED_PREFIX}{record.seed}\r\n")
        writer = csv.writer(handle)
        writer.writerow(["time", "y"])
        for k, y in enumerate(record.observations, start=1):
            writer.writerow([k, format(float(y), ".17g")])
    logger.info(f"Wrote {len(record)} observations to {path}")


def read_observations(path):
    """
    Read a file written by ``write_observations``.

    Raises:
        ArgumentError: If the header is missing or times are not 1, 2, ...
    """
    seed = None
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        lines = []
        for line in handle:
            if line.startswith("#"):
                if line.startswith(SEED_PREFIX):
                    seed = int(line[len(SEED_PREFIX) :].strip())
                continue
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != ["time", "y"]:
        raise ArgumentError(f"Expected header 'time,y' in {path}, got {header}")
    for expected, row in enumerate(reader, start=1):
        if int(row[0]) != expected:
            raise ArgumentError(f"Expected time {expected} in {path}, got {row[0]}")
        rows.append(float(row[1]))
    return ObservationRecord(np.array(rows), seed)
