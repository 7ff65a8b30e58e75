class FigplotsError(Exception):
    """Base class for figure-rendering failures."""


class MissingColumnError(FigplotsError):
    """The CSV lacks a column the recipe references."""


class EmptyDataError(FigplotsError):
    """The CSV parsed but holds no data rows."""


class RecipeError(FigplotsError):
    """No recipe exists for the requested figure id."""
