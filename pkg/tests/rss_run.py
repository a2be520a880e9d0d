"""Run the CLI in this process and report peak resident memory.

Usage: python rss_run.py REPORT_JSON -- leadsum-args...
"""

import json
import resource
import sys
import time

from leadsum.cli import main

report, sep, *args = sys.argv[1:]
assert sep == "--"


def own_peak_kb() -> int:
    # VmHWM belongs to this address space.  ru_maxrss would also carry over
    # the high-water mark of whichever process forked us before exec.
    with open("/proc/self/status") as fh:
        for line in fh:
            if line.startswith("VmHWM:"):
                return int(line.split()[1])
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss


t0 = time.perf_counter()
code = main(args)
elapsed = time.perf_counter() - t0
with open(report, "w") as fh:
    json.dump(
        {
            "exit": code,
            "seconds": elapsed,
            "self_kb": own_peak_kb(),
            # Worker processes, forked from this (small) process.
            "children_kb": resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss,
        },
        fh,
    )
sys.exit(code)
