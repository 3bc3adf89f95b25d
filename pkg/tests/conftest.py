"""Shared fixtures for the test suite.

The end-to-end acceptance checks all score the same 20-subject synthetic
population with different classifiers and attacker models, so the expensive
evaluation cells are memoised once per session; the attacker-ordering check
then reads the exact numbers the separability check already paid for.
"""

import numpy as np
import pytest

from neuroidbench import evaluation as ev
from neuroidbench import metrics as mt
from neuroidbench import synthetic as sg
from neuroidbench.classifiers import ClassifierSpec
from neuroidbench.features import FeatureRecipe
from neuroidbench.preprocessing import PreprocessParams, concat_epochs, preprocess_recording


class CellStore:
    """Mean fold EER per (classifier, attacker, separability, seed) cell.

    Scalars are memoised for the whole session. The preprocessed population
    itself is only held for the most recent (separability, seed) pair; each
    one is ~30 MB and regenerating costs about a second, so callers should
    group their requests by seed.
    """

    population = dict(n_subjects=20, epochs_per_session=100)

    def __init__(self):
        self._epoch_key = None
        self._epoch_val = None
        self._cells = {}

    def epochs(self, separability, seed):
        key = (separability, seed)
        if key != self._epoch_key:
            config = sg.SynthConfig(
                subject_separability=separability,
                session_drift=0.0,
                seed=seed,
                **self.population,
            )
            _, recordings = sg.generate(config)
            parts = [preprocess_recording(rec, PreprocessParams())[0] for rec in recordings]
            self._epoch_key = key
            self._epoch_val = concat_epochs(parts)
        return self._epoch_val

    def mean_eer(self, kind, attacker, separability, seed):
        key = (kind, attacker, separability, seed)
        if key not in self._cells:
            pipeline = ev.ShallowPipeline(
                pipeline_id=f"PSD+AR+{kind}",
                recipe=FeatureRecipe(ar_order=1),
                classifier=ClassifierSpec(kind),
            )
            plan = ev.EvalPlan(
                scheme="single_session", attacker=attacker, k_folds=2, seed=seed
            )
            result = ev.run_plan(self.epochs(separability, seed), pipeline, plan)
            self._cells[key] = float(np.mean([mt.eer(ss) for ss in result.score_sets]))
        return self._cells[key]


@pytest.fixture(scope="session")
def cells():
    return CellStore()
