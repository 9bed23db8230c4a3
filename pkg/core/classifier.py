"""
Room/passage classifier: at most two threshold rules over view features and a default label.

Training clusters logged feature vectors with k-means (k = 2), labels the cluster with
the shorter mean front_max as Room, fits a depth-2 decision tree on the labels and keeps
its top two rules.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans
from sklearn.tree import DecisionTreeClassifier

import core.constants as constants
from core.errors import ClassifierParseError, ClassifierTrainingError
from core.perception import FeatureVector
from core.utils import logger, read_artifact, strip_comment


class Place(enum.Enum):
    ROOM = "Room"
    PASSAGE = "Passage"


@dataclass(frozen=True)
class Rule:
    field: str
    op: str  # "lt" or "ge"
    threshold: float
    label: Place

    def matches(self, features: FeatureVector) -> bool:
        value = getattr(features, self.field)
        return value < self.threshold if self.op == "lt" else value >= self.threshold


@dataclass(frozen=True)
class RoomPassageClassifier:
    rules: tuple[Rule, ...]
    default_label: Place

    def __post_init__(self):
        if len(self.rules) > 2:
            raise ClassifierParseError("a classifier keeps at most two rules")
        names = FeatureVector.field_names()
        for rule in self.rules:
            if rule.field not in names:
                raise ClassifierParseError(f"unknown feature '{rule.field}'")
            if rule.op not in ("lt", "ge"):
                raise ClassifierParseError(f"unknown comparison '{rule.op}'")


def classify(classifier: RoomPassageClassifier, features: FeatureVector) -> Place:
    for rule in classifier.rules:
        if rule.matches(features):
            return rule.label
    return classifier.default_label


def default_classifier(d: float = constants.STRETCH_MIN_LENGTH_M) -> RoomPassageClassifier:
    """Room when front_max < 1.5 d and all_std < 3; Passage otherwise."""
    return RoomPassageClassifier(
        rules=(
            Rule("front_max", "ge", constants.DEFAULT_CLASSIFIER_FRONT_FACTOR * d, Place.PASSAGE),
            Rule("all_std", "ge", constants.DEFAULT_CLASSIFIER_STD_M, Place.PASSAGE),
        ),
        default_label=Place.ROOM,
    )


########################################################################
#############  Training ################################################
########################################################################

def _majority(tree, node: int, classes: np.ndarray) -> Place:
    return Place(str(classes[int(np.argmax(tree.value[node][0]))]))


def _purer_child(tree, node: int) -> tuple[int, str, int]:
    """(purer child, op that leads to it, the other child). Ties go to the left child."""
    left, right = tree.children_left[node], tree.children_right[node]
    if tree.impurity[right] < tree.impurity[left]:
        return right, "ge", left
    return left, "lt", right


def train_classifier(samples: list[FeatureVector], seed: int = constants.KMEANS_SEED) -> RoomPassageClassifier:
    """
    Learns a classifier from logged feature vectors.

    Raises:
        ClassifierTrainingError: fewer than 2k samples, or the samples cannot be split in two.
    """
    if len(samples) < 4:
        raise ClassifierTrainingError(f"need at least 4 samples, got {len(samples)}")
    X = np.vstack([s.as_array() for s in samples])
    if np.all(X == X[0]):
        raise ClassifierTrainingError("all samples are identical")

    kmeans = KMeans(n_clusters=2, init="k-means++", n_init=1,
                    max_iter=constants.KMEANS_MAX_ITER, random_state=seed)
    clusters = kmeans.fit_predict(X)
    if len(set(clusters.tolist())) < 2:
        raise ClassifierTrainingError("k-means produced a single cluster")

    front_max = FeatureVector.field_names().index("front_max")
    means = [X[clusters == k, front_max].mean() for k in (0, 1)]
    room_cluster = int(np.argmin(means))
    y = np.where(clusters == room_cluster, Place.ROOM.value, Place.PASSAGE.value)
    logger.info(f"Clustered {len(samples)} views: {int((clusters == room_cluster).sum())} room, "
                f"{int((clusters != room_cluster).sum())} passage")

    tree_model = DecisionTreeClassifier(max_depth=constants.CLASSIFIER_MAX_DEPTH,
                                        criterion="gini", random_state=seed)
    tree_model.fit(X, y)
    tree = tree_model.tree_
    classes = tree_model.classes_
    names = FeatureVector.field_names()

    if tree.children_left[0] == -1:
        raise ClassifierTrainingError("decision tree did not split")

    # The tree's left branch is x <= t; thresholds fall midway between samples
    first, first_op, other = _purer_child(tree, 0)
    rules = [Rule(names[tree.feature[0]], first_op, float(tree.threshold[0]), _majority(tree, first, classes))]
    if tree.children_left[other] != -1:
        second, second_op, rest = _purer_child(tree, other)
        rules.append(Rule(names[tree.feature[other]], second_op, float(tree.threshold[other]),
                          _majority(tree, second, classes)))
        default = _majority(tree, rest, classes)
    else:
        default = _majority(tree, other, classes)

    classifier = RoomPassageClassifier(tuple(rules), default)
    logger.info(f"Trained classifier:\n{serialize_classifier(classifier)}")
    return classifier


########################################################################
#############  Serialization ###########################################
########################################################################

def serialize_classifier(classifier: RoomPassageClassifier) -> str:
    lines = [f"rule {r.field} {r.op} {r.threshold:.17g} {r.label.value}" for r in classifier.rules]
    lines.append(f"default {classifier.default_label.value}")
    return "\n".join(lines) + "\n"


def _parse_label(line_number: int, token: str) -> Place:
    try:
        return Place(token)
    except ValueError:
        raise ClassifierParseError(f"line {line_number}: unknown label '{token}'")


def parse_classifier(text: str) -> RoomPassageClassifier:
    rules: list[Rule] = []
    default: Optional[Place] = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        if default is not None:
            raise ClassifierParseError(f"line {line_number}: content after the default line")
        tokens = line.split()
        if tokens[0] == "rule" and len(tokens) == 5:
            try:
                threshold = float(tokens[3])
            except ValueError:
                raise ClassifierParseError(f"line {line_number}: bad threshold '{tokens[3]}'")
            rules.append(Rule(tokens[1], tokens[2], threshold, _parse_label(line_number, tokens[4])))
        elif tokens[0] == "default" and len(tokens) == 2:
            default = _parse_label(line_number, tokens[1])
        else:
            raise ClassifierParseError(f"line {line_number}: expected 'rule ...' or 'default <label>'")
    if default is None:
        raise ClassifierParseError("missing default line")
    return RoomPassageClassifier(tuple(rules), default)


def load_classifier(path: Optional[str] = None, d: float = constants.STRETCH_MIN_LENGTH_M) -> RoomPassageClassifier:
    """Reads a serialized classifier, or builds the default one when no path is given."""
    if path is None:
        return default_classifier(d)
    return parse_classifier(read_artifact(path))
