"""Figure rendering for catport sweep CSVs: recipes name columns, renderers
draw them; no physics is recomputed here."""

from .errors import (
    EmptyDataError,
    FigplotsError,
    MissingColumnError,
    RecipeError,
)
from .loader import DIST_COLUMNS, SWEEP_COLUMNS, beta_label, load_csv
from .recipes import FigureRecipe, recipe_for
from .render import (
    histogram_body_peak,
    overlay_zero_crossings,
    render,
    series_maxima,
)

__version__ = "0.1.0"

__all__ = [
    "EmptyDataError",
    "FigplotsError",
    "MissingColumnError",
    "RecipeError",
    "DIST_COLUMNS",
    "SWEEP_COLUMNS",
    "beta_label",
    "load_csv",
    "FigureRecipe",
    "recipe_for",
    "histogram_body_peak",
    "overlay_zero_crossings",
    "render",
    "series_maxima",
    "__version__",
]
