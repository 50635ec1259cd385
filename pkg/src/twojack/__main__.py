from twojack.cli import entry_point

entry_point()
