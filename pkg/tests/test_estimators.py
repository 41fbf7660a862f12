import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score

from locus_lab.errors import DomainError
from locus_lab.escape import membership
from locus_lab.estimators import EscapeTimeClassifier
from locus_lab.ifs import Params


def test_predictions_match_membership():
    rng = np.random.default_rng(2)
    X = rng.uniform(-0.95, 0.95, (40, 2))
    X[0] = (0.0, 0.7)
    clf = EscapeTimeClassifier(max_depth=18).fit(X)
    y = clf.predict(X)
    assert y[0] == 0
    for (g, l), yi in zip(X[1:], y[1:]):
        assert yi == int(membership(Params(g, l), 18).survived)
    depths = clf.escape_depths(X)
    assert np.all((depths > 18) == (y == 1))


def test_clone_and_scoring():
    clf = EscapeTimeClassifier(max_depth=12, max_branches=256)
    c = clone(clf)
    assert c.get_params() == clf.get_params()
    X = np.array([[0.8, 0.7], [0.3, 0.3], [-0.75, 0.72], [0.2, -0.4]] * 3)
    y = np.array([1, 0, 1, 0] * 3)
    assert cross_val_score(clf, X, y, cv=3).min() == 1.0


def test_validation():
    clf = EscapeTimeClassifier()
    with pytest.raises(NotFittedError):
        clf.predict([[0.5, 0.5]])
    with pytest.raises(DomainError):
        clf.fit([[1.0, 0.5]])
    with pytest.raises(ValueError):
        clf.fit([[0.5, 0.5, 0.5]])
    with pytest.raises(ValueError):
        EscapeTimeClassifier(max_depth=-1).fit([[0.5, 0.5]])
