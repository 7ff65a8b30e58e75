"""figplots: render one figure per sweep CSV.

Exit codes: 0 success, 1 data error (empty CSV, missing column), 2 usage
error (unknown figure, ambiguous CSV)."""

import argparse
import sys

from .errors import EmptyDataError, FigplotsError, MissingColumnError, RecipeError
from .loader import load_csv
from .recipes import recipe_for
from .render import render


def infer_figure(path):
    frame = load_csv(path)
    figures = frame["figure"].unique()
    if len(figures) != 1:
        raise RecipeError(
            f"{path} holds rows for figures {sorted(map(str, figures))}; "
            "pass --figure"
        )
    return str(figures[0])


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="figplots",
        description="Render a publication-style figure from a sweep CSV.",
    )
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--figure", help="figure id (default: the CSV's)")
    parser.add_argument("--out-dir", default=".", dest="out_dir")
    args = parser.parse_args(argv)
    try:
        figure = args.figure or infer_figure(args.csv)
        recipe = recipe_for(figure, args.csv)
        out = render(recipe, args.out_dir)
    except RecipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EmptyDataError, MissingColumnError, FigplotsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
