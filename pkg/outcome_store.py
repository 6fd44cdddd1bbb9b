"""
Outcome export and archive
Writes verified outcomes as JSON or CSV, series as plot-data files, and keeps
a dated JSONL archive of every verification
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional
import logging

import pandas as pd

from config_manager import get_output_dir
from experiments import ExperimentOutcome

CSV_COLUMNS = ['experiment', 'N', 'replicas', 'statistic', 'target', 'tolerance', 'pass', 'seed']
FORMATS = ('json', 'csv')


class ExportError(OSError):
    """Output path not writable or format unknown"""


def _file_stem(outcome: ExperimentOutcome) -> str:
    return f"{outcome.experiment}_seed{outcome.seed}"


class OutcomeStore:
    """Export outcomes to flat files under one output directory"""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Args:
            output_dir: target directory; defaults to output.dir (AW_OUTPUT_DIR)
        """
        self.output_dir = Path(output_dir) if output_dir else get_output_dir()
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ExportError(f"Cannot create output directory {self.output_dir}: {e}") from e

        today = datetime.now().strftime("%Y-%m-%d")
        self.archive_file = self.output_dir / f"outcomes_{today}.jsonl"
        self.logger = logging.getLogger("anisowalk.outcome_store")

    # ---------- export ----------

    def export(self, outcome: ExperimentOutcome, fmt: str = 'json',
               plot_data: bool = True) -> List[Path]:
        """
        Write one outcome

        Args:
            outcome: verified outcome
            fmt: 'json' (full fidelity) or 'csv' (one flat row)
            plot_data: also write every series as a two-column file

        Returns:
            Paths written
        """
        if fmt not in FORMATS:
            raise ExportError(f"Unknown export format '{fmt}', expected one of {FORMATS}")

        written = [self.write_json(outcome) if fmt == 'json' else self.write_csv([outcome])]
        if plot_data:
            written.extend(self.write_plot_data(outcome))
        return written

    def write_json(self, outcome: ExperimentOutcome, path: Optional[Path] = None) -> Path:
        path = path or self.output_dir / f"{_file_stem(outcome)}.json"
        try:
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(outcome.to_dict(), f, indent=2, sort_keys=True)
        except OSError as e:
            raise ExportError(f"Cannot write {path}: {e}") from e
        self.logger.info(f"Wrote {path}")
        return path

    def write_csv(self, outcomes: List[ExperimentOutcome], path: Optional[Path] = None) -> Path:
        """One flat row per outcome with the fixed column set"""
        if path is None:
            stem = _file_stem(outcomes[0]) if len(outcomes) == 1 else f"outcomes_{outcomes[0].seed}"
            path = self.output_dir / f"{stem}.csv"
        frame = pd.DataFrame([
            {'experiment': o.experiment, 'N': o.N, 'replicas': o.replicas,
             'statistic': o.statistic, 'target': o.target, 'tolerance': o.tolerance,
             'pass': o.passed, 'seed': o.seed}
            for o in outcomes
        ], columns=CSV_COLUMNS)
        try:
            frame.to_csv(path, index=False, float_format='%.10g')
        except OSError as e:
            raise ExportError(f"Cannot write {path}: {e}") from e
        self.logger.info(f"Wrote {path}")
        return path

    def write_plot_data(self, outcome: ExperimentOutcome) -> List[Path]:
        """One whitespace-separated two-column file per series"""
        written = []
        for name, rows in outcome.series.items():
            path = self.output_dir / f"{_file_stem(outcome)}_{name}.dat"
            try:
                pd.DataFrame(rows, columns=['x', 'y']).to_csv(
                    path, sep=' ', index=False, header=False, float_format='%.10g')
            except OSError as e:
                raise ExportError(f"Cannot write {path}: {e}") from e
            written.append(path)
        return written

    @staticmethod
    def read_json(path) -> ExperimentOutcome:
        with open(path, 'r', encoding='utf-8') as f:
            return ExperimentOutcome.from_dict(json.load(f))

    # ---------- archive ----------

    def archive(self, outcome: ExperimentOutcome):
        """Append to today's JSONL archive (one JSON object per line)"""
        record = outcome.to_dict()
        record['timestamp'] = datetime.now().isoformat()
        try:
            with open(self.archive_file, 'a', encoding='utf-8') as f:
                json.dump(record, f)
                f.write('\n')
        except OSError as e:
            raise ExportError(f"Cannot append to {self.archive_file}: {e}") from e
        self.logger.info(f"Archived {outcome.experiment}: {'PASS' if outcome.passed else 'FAIL'}")

    def get_outcomes(self, date: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Archived records for a date

        Args:
            date: YYYY-MM-DD, today when None
        """
        if date is None:
            archive = self.archive_file
        else:
            archive = self.output_dir / f"outcomes_{date}.jsonl"
        if not archive.exists():
            return []

        records = []
        with open(archive, 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    records.append(json.loads(line))
        return records

    def summary(self, date: Optional[str] = None) -> Dict[str, Any]:
        """Counts of archived verifications and the names that failed"""
        records = self.get_outcomes(date)
        if not records:
            return {'total': 0, 'passed': 0, 'failed': 0, 'failed_experiments': []}
        frame = pd.DataFrame(records)
        failed = frame.loc[~frame['passed'], 'experiment']
        return {
            'total': int(len(frame)),
            'passed': int(frame['passed'].sum()),
            'failed': int(len(failed)),
            'failed_experiments': sorted(set(failed.tolist())),
        }
