"""Shared test fixtures.

COMPARISON_* is a frozen five-system, seven-criterion comparison (criterion
percentages as published for five retrieval networks) used to pin the
aggregator and renderer behavior; the toolkit does not claim to regenerate
these numbers.
"""

COMPARISON_CRITERIA = (
    "Category",
    "Subtype",
    "Fabric/Texture",
    "Color",
    "Variety",
    "Details",
    "Shape Difference",
)

COMPARISON_SYSTEMS = ("V1", "V2", "V3", "V4", "V5")

COMPARISON_CELLS = {
    "V1": dict(zip(COMPARISON_CRITERIA, (96.9, 71.5, 68.5, 67.2, 24.8, 36.3, 32.7))),
    "V2": dict(zip(COMPARISON_CRITERIA, (93.7, 70.4, 77.7, 68.3, 32.7, 43.5, 31.7))),
    "V3": dict(zip(COMPARISON_CRITERIA, (95.4, 71.7, 69.2, 64.8, 33.3, 33.3, 20.1))),
    "V4": dict(zip(COMPARISON_CRITERIA, (99.8, 77.3, 86.5, 70.2, 21.7, 43.4, 20.2))),
    "V5": dict(zip(COMPARISON_CRITERIA, (98.3, 86.3, 80.0, 73.5, 27.3, 37.9, 21.0))),
}

# Expected per-row (best, worst) systems for the fixture above.
COMPARISON_BEST_WORST = {
    "Category": ("V4", "V2"),
    "Subtype": ("V5", "V2"),
    "Fabric/Texture": ("V4", "V1"),
    "Color": ("V5", "V3"),
    "Variety": ("V3", "V4"),
    "Details": ("V2", "V3"),
    "Shape Difference": ("V1", "V3"),
}
