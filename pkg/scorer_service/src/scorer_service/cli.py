"""Command line for training and serving the scorer model."""

from __future__ import annotations

import logging

import click

from .model import ServiceConfig, load_model, save_model
from .server import ScorerServer, serve_stdio
from .train import train as train_model


@click.group()
def main():
    """Remote scorer service: train heads and serve the wire protocol."""
    logging.basicConfig(level=logging.INFO)


@main.command()
@click.option("--inference", "inference_path", type=click.Path(exists=True), default=None)
@click.option("--ordering", "ordering_path", type=click.Path(exists=True), default=None)
@click.option("--heads", default="inference,ordering", show_default=True)
@click.option("--shared-encoder/--separate-encoders", default=True, show_default=True,
              help="Multitask (shared encoder) vs independent training.")
@click.option("--language", default="en", show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def train(inference_path, ordering_path, heads, shared_encoder, language,
          epochs, lr, seed, out_dir):
    """Train the enabled heads on emitted training-pair files."""
    config = ServiceConfig(
        heads=tuple(h.strip() for h in heads.split(",") if h.strip()),
        shared_encoder=shared_encoder,
        language=language,
    )
    try:
        model, metrics = train_model(
            inference_path, ordering_path, config,
            epochs=epochs, lr=lr, seed=seed)
    except ValueError as e:
        raise click.ClickException(str(e))
    save_model(model, out_dir)
    for key, value in metrics.items():
        if key != "schedule":
            click.echo(f"{key}: {value:.3f}")
    click.echo(f"saved model to {out_dir}")


@main.command()
@click.option("--model", "model_dir", type=click.Path(exists=True), required=True)
@click.option("--listen", default="127.0.0.1:8756", show_default=True)
@click.option("--lang", default=None,
              help="Serving language override (cross-lingual zero-shot).")
@click.option("--stdio", is_flag=True, help="Serve over stdin/stdout instead of HTTP.")
def serve(model_dir, listen, lang, stdio):
    """Serve a trained model over the wire protocol."""
    model = load_model(model_dir)
    if lang:
        model.config.language = lang
    if stdio:
        serve_stdio(model)
        return
    host, _, port = listen.partition(":")
    server = ScorerServer(model, host=host, port=int(port or 0))
    click.echo(f"listening on {server.endpoint}", err=True)
    server.serve_forever()


if __name__ == "__main__":
    main()
