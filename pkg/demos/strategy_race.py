"""Race the allocation strategies on a synthetic multi-arm world.

A scaled-down version of the shipped desk race: power-law arms where two
hide far more species than the rest. The posterior-guided strategy has to
find them from data; the oracle is told; uniform never looks.

    python3 demos/strategy_race.py            # quick 6-arm race, ~1 min
    python3 demos/strategy_race.py desk-zipf  # the full desk preset, ~2 min
"""

import sys

from hpybandit import ExperimentConfig, GibbsConfig, preset_config, run_experiment, zipf_population


def quick_config() -> ExperimentConfig:
    arms = tuple(
        zipf_population(800 if j < 2 else 200, s=1.3 if j < 2 else 2.0,
                        name=f"arm{j}", prefix=f"a{j}-")
        for j in range(6)
    )
    return ExperimentConfig(
        arms=arms,
        strategies=("hpyts", "gtts", "uniform", "oracle"),
        n_init=20,
        m_per_step=40,
        t_steps=40,
        r_replicates=8,
        n_particles=60,
        seed=17,
        gibbs=GibbsConfig(n_sweeps=300, burn_in=150, n_particles=60),
    )


def main() -> None:
    cfg = preset_config(sys.argv[1]) if len(sys.argv) > 1 else quick_config()
    print(f"{len(cfg.arms)} arms, {cfg.t_steps} rounds of {cfg.m_per_step} cells, "
          f"{cfg.r_replicates} replicates\n")
    trace = run_experiment(cfg)

    print("mean cumulative distinct species:")
    header = f"{'round':>6}" + "".join(f"{s:>10}" for s in cfg.strategies)
    print(header)
    summary = {(name, step): (mean, sd) for name, step, mean, sd in trace.summary()}
    marks = sorted({0, cfg.t_steps // 4, cfg.t_steps // 2, cfg.t_steps})
    for step in marks:
        cells = "".join(f"{summary[(s, step)][0]:>10.1f}" for s in cfg.strategies)
        print(f"{step:>6}{cells}")

    print("\nfinal spread (sd over replicates):")
    for s in cfg.strategies:
        mean, sd = summary[(s, cfg.t_steps)]
        print(f"  {s:<8} {mean:7.1f} +- {sd:.1f}")


if __name__ == "__main__":
    main()
