import pytest

from acbckit.model import Attribute, SurveyDesign, default_design


@pytest.fixture(scope="session")
def design():
    return default_design()


@pytest.fixture(scope="session")
def two_attr_design():
    """Toy shape: one 3-level and one 2-level attribute (12 rankings)."""
    return SurveyDesign(
        attributes=(
            Attribute(label="A", levels=("A1", "A2", "A3")),
            Attribute(label="B", levels=("B1", "B2")),
        ),
        choice_tasks=1,
    )
