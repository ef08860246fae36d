"""Config loading, experiment runners and the command-line front-end."""
