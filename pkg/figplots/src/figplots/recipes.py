"""Figure recipes: which columns of a sweep CSV become which axes. All
physics values (grids, peak positions, amplitudes) flow from the CSV; a
recipe only names columns and labels."""

from dataclasses import dataclass, field

from .errors import RecipeError
from .loader import DIST_COLUMNS, SWEEP_COLUMNS


@dataclass(frozen=True)
class FigureRecipe:
    figure: str
    csv_path: str
    kind: str  # map | curve | dist
    x: str
    y: str
    value: str = None          # map color column
    series: tuple = ()         # grouping columns for curve legends / panels
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple = None
    ylim: tuple = None
    xscale: str = "linear"
    overlay: str = None        # distribution overlay column

    def __post_init__(self):
        schema = DIST_COLUMNS if self.kind == "dist" else SWEEP_COLUMNS
        referenced = (self.x, self.y, self.value, self.overlay, *self.series)
        unknown = [c for c in referenced if c and c not in schema]
        if unknown:
            raise RecipeError(
                f"{self.figure}: recipe references {unknown}, not in the "
                f"{'distribution' if self.kind == 'dist' else 'sweep'} schema"
            )
        if self.kind not in ("map", "curve", "dist"):
            raise RecipeError(f"{self.figure}: unknown kind {self.kind!r}")


_MAP_AXIS = {
    "3a": "beta_im", "3b": "beta_im", "8a": "beta_im", "8b": "beta_im",
    "7a": "beta_re", "7b": "beta_re",
}
_BETA_SERIES = ("beta_re", "beta_im")


def recipe_for(figure, csv_path):
    if figure in _MAP_AXIS:
        axis = _MAP_AXIS[figure]
        return FigureRecipe(
            figure, csv_path, "map", x=axis, y="alpha", value="fidelity",
            xlabel="Im beta" if axis == "beta_im" else "Re beta",
            ylabel="alpha",
        )
    if figure in ("4a", "4b", "9a", "9b"):
        return FigureRecipe(
            figure, csv_path, "curve", x="xi", y="fidelity",
            series=_BETA_SERIES, xlabel="xi", ylabel="fidelity",
        )
    if figure in ("6a", "6b"):
        return FigureRecipe(
            figure, csv_path, "curve", x="xi", y="avg_fidelity",
            series=_BETA_SERIES, xlabel="xi", ylabel="average fidelity",
        )
    if figure in ("5a", "5b"):
        return FigureRecipe(
            figure, csv_path, "curve", x="N", y="fidelity",
            series=_BETA_SERIES, xscale="log",
            xlabel="measurements N", ylabel="fidelity",
        )
    if figure == "loss":
        return FigureRecipe(
            figure, csv_path, "curve", x="loss", y="avg_fidelity",
            series=("beta_re", "beta_im", "N"),
            xlabel="loss probability", ylabel="average fidelity",
        )
    if figure == "dist":
        return FigureRecipe(
            figure, csv_path, "dist", x="n", y="p_n",
            series=("stage", "variant", "beta_re", "beta_im"),
            overlay="overlay_cos",
            xlabel="Fock level n", ylabel="p(n)",
        )
    raise RecipeError(f"no recipe for figure {figure!r}")
