"""Module providing utility functions to support the exploration and navigation pipeline."""

import os
import sys
import math
import logging
from typing import Optional

from google.cloud import storage

if __name__ == "__main__":
    # Add parent directory to Python path when running as script
    sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import core.constants as constants

# Set up a logging instance that will write to stdout
logging.basicConfig(
    level=getattr(logging, constants.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler(sys.stdout)]
)
# Create the logger at module level so its settings are applied throughout code base
logger = logging.getLogger(__name__)

Point = tuple[float, float]

########################################################################
#############  Artifact I/O ############################################
########################################################################

def _split_gcs_path(path: str) -> tuple[str, str]:
    """
    Splits "gs://bucket_name/path/to/file" into the bucket name and the blob path.
    """
    path_without_scheme = path.replace('gs://', '', 1)
    parts = path_without_scheme.split(sep='/', maxsplit=1)
    if len(parts) != 2 or not parts[1]:
        raise ValueError("GCS path must be in the format gs://bucket_name/path/to/file")
    return parts[0], parts[1]

def save_artifact(text: str, path: str, storage_client: Optional[storage.Client] = None) -> None:
    """
    Saves a text artifact (world, grid raster, skeleton, report, SVG...) to either a
    local file or a Google Cloud Storage path.

    Args:
        text (str): The artifact contents.
        path (str): Either a local file path (e.g., "artifacts/run_0/skeleton.txt") or a GCS path
                    in the format "gs://bucket_name/path/to/file".
        storage_client (google.cloud.storage.Client, optional): An already initialized GCS client.
            If not provided, a new client will be created.
    """
    if path.startswith("gs://"):
        bucket_name, blob_path = _split_gcs_path(path)

        # Use the provided client or create a new one.
        if storage_client is None:
            storage_client = storage.Client()

        bucket = storage_client.bucket(bucket_name)
        blob = bucket.blob(blob_path)
        blob.upload_from_string(text)
        logger.info(f"Artifact saved to {path}")
    else:
        # Ensure the local directory exists.
        local_dir = os.path.dirname(path)
        if local_dir and not os.path.exists(local_dir):
            os.makedirs(local_dir)
        with open(path, "w", newline="\n") as f:
            f.write(text)
        logger.info(f"Artifact saved locally to {path}")

def read_artifact(path: str, storage_client: Optional[storage.Client] = None) -> str:
    """
    Reads a text artifact written by save_artifact, from a local file or a GCS path.
    """
    if path.startswith("gs://"):
        bucket_name, blob_path = _split_gcs_path(path)
        if storage_client is None:
            storage_client = storage.Client()
        return storage_client.bucket(bucket_name).blob(blob_path).download_as_text()
    with open(path, "r") as f:
        return f.read()

def join_artifact_path(directory: str, name: str) -> str:
    """Joins an output directory (local or gs://) with a file name."""
    if directory.startswith("gs://"):
        return directory.rstrip('/') + '/' + name
    return os.path.join(directory, name)

def format_number(value: float) -> str:
    """Formats a float with the fixed number of decimals used in all artifacts."""
    text = f"{value:.{constants.ARTIFACT_DECIMALS}f}"
    # Avoid "-0.000000" so serializations are stable across platforms
    if text.startswith('-') and float(text) == 0.0:
        text = text[1:]
    return text

def strip_comment(line: str) -> str:
    """Removes a trailing '#' comment and surrounding whitespace."""
    return line.split('#', 1)[0].strip()

########################################################################
#############  Geometry helpers ########################################
########################################################################

def normalize_angle(angle: float) -> float:
    """
    Normalizes an angle in radians to the half-open interval (-pi, pi].

    For example:
        >>> normalize_angle(3 * math.pi / 2)
        -1.5707963267948966
        >>> normalize_angle(-math.pi)
        3.141592653589793
    """
    wrapped = math.fmod(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped

def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])

def bearing(origin: Point, heading: float, point: Point) -> float:
    """Angle of `point` seen from `origin`, relative to `heading`, normalized."""
    return normalize_angle(math.atan2(point[1] - origin[1], point[0] - origin[0]) - heading)

def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Minimum distance from point p to the closed segment ab."""
    abx, aby = b[0] - a[0], b[1] - a[1]
    length_sq = abx * abx + aby * aby
    if length_sq == 0.0:
        return distance(p, a)
    t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / length_sq
    t = max(0.0, min(1.0, t))
    return distance(p, (a[0] + t * abx, a[1] + t * aby))

def _orientation(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

def segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True when closed segments ab and cd share at least one point."""
    o1, o2 = _orientation(a, b, c), _orientation(a, b, d)
    o3, o4 = _orientation(c, d, a), _orientation(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    # Collinear or touching cases
    return (
        (o1 == 0 and point_segment_distance(c, a, b) == 0.0)
        or (o2 == 0 and point_segment_distance(d, a, b) == 0.0)
        or (o3 == 0 and point_segment_distance(a, c, d) == 0.0)
        or (o4 == 0 and point_segment_distance(b, c, d) == 0.0)
    )

def segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> float:
    """Minimum distance between closed segments ab and cd."""
    if segments_intersect(a, b, c, d):
        return 0.0
    return min(
        point_segment_distance(a, c, d),
        point_segment_distance(b, c, d),
        point_segment_distance(c, a, b),
        point_segment_distance(d, a, b),
    )

def circular_mean(angles: list[float]) -> float:
    """Mean direction of a list of headings in radians."""
    return math.atan2(
        sum(math.sin(a) for a in angles) / len(angles),
        sum(math.cos(a) for a in angles) / len(angles),
    )
