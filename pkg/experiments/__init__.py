# experiments/__init__.py
from . import ap_study
from . import dt_independence
from . import error_vs_h
from . import ode_crosscheck
from . import single_run
from . import time_convergence

EXPERIMENTS = {
    "single_run": single_run.run_experiment,
    "dt_independence": dt_independence.run_experiment,
    "error_vs_h": error_vs_h.run_experiment,
    "time_convergence": time_convergence.run_experiment,
    "ap_study": ap_study.run_experiment,
    "ode_crosscheck": ode_crosscheck.run_experiment,
}
