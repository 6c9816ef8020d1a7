"""Streaming service: FastAPI app wrapping the simulator core."""
