"""Console entry point."""

from lcmix.cli import cli


def main() -> None:
    cli(prog_name="lcmix")


if __name__ == "__main__":
    main()
