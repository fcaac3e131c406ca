"""Script entry point: render one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, TraceSchemaError, plot_events, plot_states


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="traceplots",
        description="Render state-trajectory and inter-event figures from an "
                    "exported trace CSV (PNG or SVG chosen by --out extension).")
    parser.add_argument("--trace", required=True, help="trace CSV path")
    parser.add_argument("--dos", default=None, help="attack-signal JSON to shade")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--states", default=None,
                        help="comma-separated 1-based state indices (default: all)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--kind", choices=["states", "events"], default="states")
    args = parser.parse_args(argv)

    wanted: tuple[int, ...] = ()
    if args.states:
        try:
            wanted = tuple(int(tok) for tok in args.states.split(","))
        except ValueError:
            print(f"bad --states value {args.states!r}; expected e.g. 1,2,3",
                  file=sys.stderr)
            return 2
    spec = PlotSpec(trace_csv=args.trace, output=args.out, dos_json=args.dos,
                    title=args.title, states=wanted)
    try:
        if args.kind == "states":
            plot_states(spec)
        else:
            plot_events(spec)
    except (TraceSchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
