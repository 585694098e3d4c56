"""cmclab: cli."""
