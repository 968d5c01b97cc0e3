"""Discrete-event simulation cross-check.

Simulates the base system for ten independent replications and lines the
estimates up against the exact values, with z-scores. Everything is
reproducible from the master seed; rerunning this script gives the same
numbers to the last digit.
"""
import numpy as np

from mginfpolling import (
    Deterministic,
    Exponential,
    QueueSpec,
    SimConfig,
    SystemSpec,
    cycle_moments,
    polling_means,
    run,
    sojourn_mean,
)

system = SystemSpec((
    QueueSpec(arrival_rate=0.8, service=Exponential(1.0),
              visit=Exponential(1.0), switch=Deterministic(0.25)),
    QueueSpec(arrival_rate=0.5, service=Exponential(1.5),
              visit=Exponential(1.5), switch=Deterministic(0.25)),
))

config = SimConfig(warmup_cycles=1_000, measured_cycles=20_000,
                   replications=10, master_seed=2026)
print(f"running {config.replications} replications x "
      f"{config.measured_cycles} cycles, master seed {config.master_seed}")
report = run(system, config)

pm = polling_means(system)
rows = []
for i in range(len(system)):
    rows.append((f"polling count q{i + 1} (own visit)",
                 pm.at_polling[i, i],
                 report.polling_means[i, i], report.polling_stderr[i, i]))
    rows.append((f"sojourn mean q{i + 1}", sojourn_mean(system, i),
                 report.sojourn_means[i], report.sojourn_stderr[i]))
total_rate = sum(q.arrival_rate for q in system.queues)
rows.append(("services per cycle",
             total_rate * cycle_moments(system).cycle_mean,
             report.throughput_mean, report.throughput_stderr))

print(f"\n{'quantity':<28} {'exact':>10} {'estimate':>10} "
      f"{'stderr':>9} {'z':>6}")
for name, exact, est, se in rows:
    z = (est - exact) / se
    print(f"{name:<28} {exact:>10.5f} {est:>10.5f} {se:>9.5f} {z:>6.2f}")

# arrivals split by how they ended up being served
print("\nsojourn means by service phase (queue 1):")
labels = ("finished during the visit it arrived in",
          "arrived during a visit, carried over",
          "arrived while the server was elsewhere")
for k, label in enumerate(labels):
    mean = report.sojourn_phase_means[0, k]
    count = report.sojourn_phase_counts[0, k]
    print(f"  {label}: mean {mean:.4f} ({int(count)} customers)")
