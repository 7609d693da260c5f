#!/usr/bin/env python3
"""Generate the 50-case demonstration series fixture.

Sweeps parametric-driver candidates through the simulator and picks a
deterministic mix of 22 hazard-free and 28 hazardous take-over episodes,
with take-over delays on both sides of the 1.77 s threshold. Writes
fixtures/series_campaign50.json; rerunning is idempotent.
"""

import json
from pathlib import Path

from fmsim.classify import Controllability, classify_episode
from fmsim.drivers import fixed, parametric
from fmsim.scenario import default_config, run_episode
from fmsim.testmanager import sim_config_to_dict

ROOT = Path(__file__).resolve().parent.parent

CLEAN_TARGET = 22
HAZARD_TARGET = 28

# (delay, scale) candidates; the split between hazardous and clean outcomes
# is decided by simulation, not assumed.
CANDIDATES = [
    # timely take-overs, mild steering
    (0.3, 1.0), (0.5, 0.8), (0.7, 1.2), (0.9, 1.0), (1.1, 0.6), (1.3, 1.0),
    (1.5, 1.4), (1.6, 0.9), (1.0, 0.3), (0.6, 1.5), (1.2, 2.0), (0.4, 0.5),
    # delayed take-overs, mild steering
    (1.9, 1.0), (2.1, 0.7), (2.27, 1.0), (2.5, 1.2), (2.77, 0.5), (3.0, 1.0),
    (3.12, 2.0), (3.39, 1.0), (3.6, 0.8), (3.9, 1.5), (2.0, 3.0), (2.6, 2.0),
    (4.2, 1.0), (4.5, 0.7),
    # timely take-overs, strong oversteer (hazard candidates)
    (0.1, 3.0), (0.1, 10.0), (0.15, 5.0), (0.2, 8.0), (0.25, 12.0), (0.3, 10.0),
    (0.35, 15.0), (0.4, 10.0), (0.45, 20.0), (0.5, 10.0), (0.55, 25.0),
    (0.6, 12.0), (0.7, 15.0), (0.8, 10.0), (0.9, 20.0), (1.0, 10.0),
    (1.1, 15.0), (1.2, 30.0), (1.3, 20.0), (1.4, 30.0), (1.5, 25.0), (1.6, 30.0),
    # delayed take-overs, strong oversteer (hazard candidates)
    (1.77, 30.0), (1.8, 40.0), (1.9, 40.0), (2.0, 50.0), (2.1, 60.0),
    (2.27, 60.0), (2.4, 80.0), (2.5, 90.0),
]


def main():
    config = default_config()
    clean, hazardous = [], []
    for delay, scale in CANDIDATES:
        spec = parametric(fixed(delay), fixed(scale))
        trace = run_episode(config, spec, seed=0)
        _, labels, _ = classify_episode(trace, config.timeline.tor_time, 1, config)
        bucket = (
            hazardous if labels.controllability == Controllability.NOT_PROVIDED else clean
        )
        bucket.append((delay, scale))
    print(f"candidates: {len(clean)} clean, {len(hazardous)} hazardous")
    if len(clean) < CLEAN_TARGET or len(hazardous) < HAZARD_TARGET:
        raise SystemExit("not enough candidates for the 22/28 split")

    chosen = [(d, s, False) for d, s in clean[:CLEAN_TARGET]]
    chosen += [(d, s, True) for d, s in hazardous[:HAZARD_TARGET]]
    # interleave so hazardous cases are spread through the series
    chosen.sort(key=lambda x: (x[0], x[1]))

    cases = []
    for i, (delay, scale, _haz) in enumerate(chosen, start=1):
        cases.append(
            {
                "tc_index": i,
                "seed": 1000 + i,
                "detector_seed": 2000 + i,
                "driver": {
                    "variant": "PARAMETRIC",
                    "delay": {"family": "fixed", "value": delay},
                    "steer_scale": {"family": "fixed", "value": scale},
                    "steer_hold": 1.0,
                },
            }
        )
    series = {
        "name": "campaign-50",
        "defaults": sim_config_to_dict(config),
        "pass_criteria": {},
        "cases": cases,
    }
    out = ROOT / "fixtures" / "series_campaign50.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(series, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} with {len(cases)} cases")


if __name__ == "__main__":
    main()
