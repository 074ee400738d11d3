"""
The multi-region comparison
===========================

Sample 100x100 regions from a larger synthetic city and run every method on
each. A smaller city and fewer regions keep this quick; the full protocol
uses a 2500x2500 city and 25 regions (``bssopt experiment``).
"""

import sys

from bssopt.dataio import GeneratorConfig, generate_instance
from bssopt.experiment import run_experiment

city = generate_instance(GeneratorConfig(width=600, height=600, hotspots=60, existing_stations=60, seed=2024))
print(city)

report = run_experiment(city, ("greedy", "sa", "pso", "pso-coverage", "laba"),
                        regions=int(sys.argv[1]) if len(sys.argv) > 1 else 5,
                        max_evaluations=4000)
print(report.table())

# %%
# Per-region rows are in the CSV; aggregate rows have region "mean" and put
# the success rate in the feasible column.
print(report.to_csv(include_wall=False).splitlines()[-1])
