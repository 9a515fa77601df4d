#!/usr/bin/env python3
"""Generate a synthetic 1-3 ratings file for a run's best predictions.

The simulated rater starts from the gold label, flips it with a configurable
probability, and rates agreement against the model prediction (3 = agree,
1 = disagree, 2 = uncertain). Useful for exercising `groomlens kappa` and the
review service without a human rater.
"""

import click

from groomlens.fixtures import simulate_ratings


@click.command()
@click.option("--run", "run_dir", type=click.Path(exists=True), required=True)
@click.option("--corpus", "chats_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--flip-probability", type=float, default=0.0, show_default=True,
              help="Chance the rater's latent label differs from gold.")
@click.option("--uncertain-probability", type=float, default=0.0, show_default=True,
              help="Chance of an uncertain (score 2) rating.")
@click.option("--seed", type=int, default=0, show_default=True)
def main(run_dir, chats_path, labels_path, out_path, flip_probability,
         uncertain_probability, seed):
    n = simulate_ratings(
        run_dir, chats_path, labels_path, out_path,
        flip_probability=flip_probability,
        uncertain_probability=uncertain_probability,
        seed=seed,
    )
    click.echo(f"wrote {n} ratings to {out_path}")


if __name__ == "__main__":
    main()
