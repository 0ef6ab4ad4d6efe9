"""Attach a system under test that lives in another process.

The protocol is line-delimited JSON over stdin/stdout: a {"v": 1} handshake,
then {"id": n, "x": [..]} requests answered by {"id": n, "dt": ..,
"channels": {..}} replies. Anything that speaks it can be tested: here the
'simulator' is a tiny Python script written to a temp file, but a robot
simulator launcher works the same way.
"""

import sys
import tempfile
import textwrap
from pathlib import Path

from stlsurrogate import agm_rob, parse_formula
from stlsurrogate.blackbox import ExternalBlackBox

SIMULATOR = textwrap.dedent(
    """
    import json, math, sys
    print(json.dumps({"v": 1}), flush=True)
    for line in sys.stdin:
        req = json.loads(line)
        gain = req["x"][0]
        # a step response whose ringing grows with the gain and damps slowly
        amp = 0.2 + 0.3 * gain
        y = [1 - amp * math.exp(-0.1 * k) * math.cos(gain * k * 0.4)
             for k in range(40)]
        print(json.dumps({"id": req["id"], "dt": 0.1,
                          "channels": {"y": y}}), flush=True)
    """
)

with tempfile.TemporaryDirectory() as tmp:
    sim = Path(tmp) / "sim.py"
    sim.write_text(SIMULATOR)

    # settle near 1.0 within 2 s and stay there for 1.5 s
    spec = parse_formula(
        "ev[0,2] (alw[0,1.5] (clamp(norm(y - 1), 0, 0.4) <= -0.5))"
    )

    with ExternalBlackBox([sys.executable, str(sim)], timeout=30) as plant:
        print("gain   robustness")
        for gain in (0.5, 1.0, 2.0, 3.5, 5.0):
            trace = plant.evaluate([gain])
            print(f"{gain:4.1f}   {agm_rob(spec, trace, 0):+.4f}")
