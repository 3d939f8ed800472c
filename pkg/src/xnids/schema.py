"""NSL-KDD record layout: the 41 connection features, label/difficulty columns,
attack-label taxonomy and its 5-class grouping."""

from dataclasses import dataclass
from enum import IntEnum

# Canonical NSL-KDD column order. Each data line carries these 41 feature
# tokens followed by the attack label and a difficulty score (43 fields).
FEATURE_NAMES = (
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)

CATEGORICAL_FEATURES = ("protocol_type", "service", "flag")

NUM_FEATURES = len(FEATURE_NAMES)
LABEL_POSITION = 41
DIFFICULTY_POSITION = 42
FIELDS_PER_LINE = 43


class AttackClass(IntEnum):
    """Five-way traffic grouping with fixed integer codes."""

    DOS = 0
    PROBE = 1
    R2L = 2
    U2R = 3
    NORMAL = 4


CLASS_NAMES = ("DoS", "Probe", "R2L", "U2R", "Normal")

# The 22 attack labels present in KDDTrain+ plus "normal", grouped into the
# four attack families.
ATTACK_LABEL_TO_CLASS = {
    "back": AttackClass.DOS,
    "land": AttackClass.DOS,
    "neptune": AttackClass.DOS,
    "pod": AttackClass.DOS,
    "smurf": AttackClass.DOS,
    "teardrop": AttackClass.DOS,
    "ipsweep": AttackClass.PROBE,
    "nmap": AttackClass.PROBE,
    "portsweep": AttackClass.PROBE,
    "satan": AttackClass.PROBE,
    "ftp_write": AttackClass.R2L,
    "guess_passwd": AttackClass.R2L,
    "imap": AttackClass.R2L,
    "multihop": AttackClass.R2L,
    "phf": AttackClass.R2L,
    "spy": AttackClass.R2L,
    "warezclient": AttackClass.R2L,
    "warezmaster": AttackClass.R2L,
    "buffer_overflow": AttackClass.U2R,
    "loadmodule": AttackClass.U2R,
    "perl": AttackClass.U2R,
    "rootkit": AttackClass.U2R,
    "normal": AttackClass.NORMAL,
}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list with the categorical subset marked."""

    features: tuple[tuple[str, str], ...]  # (name, "numeric"|"categorical")
    label_position: int = LABEL_POSITION
    difficulty_position: int = DIFFICULTY_POSITION

    def __post_init__(self):
        names = [name for name, _ in self.features]
        if len(names) != NUM_FEATURES:
            raise ValueError(f"schema must list {NUM_FEATURES} features, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        cats = {name for name, kind in self.features if kind == "categorical"}
        if cats != set(CATEGORICAL_FEATURES):
            raise ValueError(f"categorical set must be {set(CATEGORICAL_FEATURES)}, got {cats}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.features)

    @property
    def categorical_indices(self) -> tuple[int, ...]:
        return tuple(i for i, (_, kind) in enumerate(self.features) if kind == "categorical")

    @property
    def numeric_indices(self) -> tuple[int, ...]:
        return tuple(i for i, (_, kind) in enumerate(self.features) if kind == "numeric")


def default_schema() -> FeatureSchema:
    return FeatureSchema(
        features=tuple(
            (name, "categorical" if name in CATEGORICAL_FEATURES else "numeric")
            for name in FEATURE_NAMES
        )
    )


class UnknownAttackLabel(ValueError):
    def __init__(self, label: str):
        super().__init__(f"unknown attack label: {label!r}")
        self.label = label


def map_attack_label(label: str) -> AttackClass:
    """Map one of the 23 training attack labels to its 5-way class."""
    try:
        return ATTACK_LABEL_TO_CLASS[label]
    except KeyError:
        raise UnknownAttackLabel(label) from None
