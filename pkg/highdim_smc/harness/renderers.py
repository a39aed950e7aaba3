import csv
import io
import math
import numbers
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ExperimentResult:
    """
    Tabular output of an experiment.

    Attributes:
        experiment (str): Experiment name.
        columns (tuple[str, ...]): Column names.
        rows (list[tuple]): One tuple per row, in column order.
        degenerate_fraction (float): Fraction of replicates excluded for weight degeneracy.
        notes (list[str]): Free-text remarks written as comment lines.
    """

    experiment: str
    columns: tuple
    rows: list = field(default_factory=list)
    degenerate_fraction: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def degeneracy_dominated(self):
        return self.degenerate_fraction > 0.5

    def column(self, name):
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


class CsvEncoder:
    """
    Turns cell values into CSV text.

    Reals are written with 17 significant digits and ``.`` as decimal separator, which round-trips
    every double; booleans as ``true``/``false``; missing values as empty cells.
    """

    float_format = ".17g"

    def default(self, obj):
        """
        Encode one cell.

        Args:
            obj: The value to encode.

        Returns:
            str: Its CSV text.
        """
        if obj is None:
            return ""
        elif isinstance(obj, (bool, np.bool_)):
            return "true" if obj else "false"
        elif isinstance(obj, numbers.Integral):
            return str(int(obj))
        elif isinstance(obj, numbers.Real):
            value = float(obj)
            if math.isnan(value):
                return "nan"
            return format(value, self.float_format)
        # Strings and anything else
        return str(obj)


class CsvRenderer:
    """
    Renders an ``ExperimentResult`` as RFC 4180 style CSV.

    The output starts with a comment line recording the configuration hash and the seed, followed by
    one comment line per note, the header row and the data rows.

    Attributes:
        charset (str): Encoding of written files.
        line_terminator (str): Record separator.
        comment_prefix (str): Prefix of comment lines.
    """

    charset = "utf-8"
    line_terminator = "\r\n"
    comment_prefix = "# "
    encoder_class = CsvEncoder

    def render(self, result, config_hash, seed):
        """
        Render the result.

        Args:
            result (ExperimentResult): The table.
            config_hash (str): Hash of the configuration that produced it.
            seed (int): The master seed.

        Returns:
            str: The CSV document.
        """
        encoder = self.encoder_class()
        buffer = io.StringIO()
        buffer.write(f"{self.comment_prefix}config_hash={config_hash} seed={seed}{self.line_terminator}")
        for note in result.notes:
            buffer.write(f"{self.comment_prefix}{note}{self.line_terminator}")

        writer = csv.writer(buffer, lineterminator=self.line_terminator)
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([encoder.default(value) for value in row])
        return buffer.getvalue()

    def write(self, result, config_hash, seed, path):
        with open(path, "w", encoding=self.charset, newline="") as handle:
            handle.write(self.render(result, config_hash, seed))
