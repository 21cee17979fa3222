"""Small-sample adaptive choice-based conjoint toolkit.

Elicits most-typical levels with a build-your-own question, most-ideal
levels with a single-elimination choice tournament validated by a
feasible-ranking filter, and estimates population frequency
distributions from small known-N samples.
"""

from acbckit.model import (
    Attribute,
    ChoiceTask,
    DesignError,
    FrequencyDistribution,
    PopulationEstimate,
    Profile,
    RespondentRecord,
    SurveyDesign,
    ValidationReport,
    load_design,
    validate_design,
)

__all__ = [
    "Attribute",
    "ChoiceTask",
    "DesignError",
    "FrequencyDistribution",
    "PopulationEstimate",
    "Profile",
    "RespondentRecord",
    "SurveyDesign",
    "ValidationReport",
    "load_design",
    "validate_design",
]

__version__ = "0.1.0"
