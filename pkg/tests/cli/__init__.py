# tests.cli
