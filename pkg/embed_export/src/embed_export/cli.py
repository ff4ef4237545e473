"""Command line for embedding export."""

import click

from .exporter import ExportJob, export_embeddings


@click.command()
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Split/label/sentence TSV to embed.")
@click.option("--model", required=True, help="Transformer name or checkpoint path.")
@click.option("--out", required=True, type=click.Path(), help="Output PROBEEMB file.")
@click.option("--batch-size", default=32, show_default=True, type=int)
@click.option("--include-special-tokens", is_flag=True,
              help="Keep [CLS]/[SEP]-style tokens in the mean.")
@click.option("--expected-dim", type=int, default=None,
              help="Fail unless the model width matches.")
@click.option("--encoder-id", default=None, help="Encoder id written to the header.")
def main(dataset, model, out, batch_size, include_special_tokens, expected_dim, encoder_id):
    """Export transformer sentence embeddings to the PROBEEMB format."""
    job = ExportJob(
        dataset_tsv=dataset, model=model, out_path=out, batch_size=batch_size,
        include_special_tokens=include_special_tokens, expected_dim=expected_dim,
        encoder_id=encoder_id,
    )
    path = export_embeddings(job)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
