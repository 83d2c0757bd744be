"""Holdout performance metrics."""

from typing import List, Sequence

import numpy as np
from pydantic import BaseModel
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from core.network import Network, predict_batched
from dataset.images import LabeledImage, stack
from utils.errors import DataError


class ClassifierMetrics(BaseModel):
    """Accuracy and macro-averaged precision, recall and F1."""

    count: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: List[List[int]]


def evaluate_classifier(network: Network, images: Sequence[LabeledImage]) -> ClassifierMetrics:
    """Score the network's argmax predictions on a labeled set.

    Args:
        network: Classifier
        images: Non-empty labeled images

    Returns:
        Metrics; the confusion matrix has true classes as rows
    """
    if not images:
        raise DataError("cannot evaluate on an empty set")
    labels = np.array([item.label for item in images])
    predictions = predict_batched(network, stack(images)).argmax(axis=1)
    classes = list(range(network.num_classes))

    precision, recall, f1, _ = precision_recall_fscore_support(
        labels, predictions, labels=classes, average="macro", zero_division=0
    )
    return ClassifierMetrics(
        count=len(images),
        accuracy=float(accuracy_score(labels, predictions)),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        confusion=confusion_matrix(labels, predictions, labels=classes).tolist(),
    )
