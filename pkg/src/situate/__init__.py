"""Incremental situation modeling from text against a frame-style knowledge base."""
from .kb import KnowledgeBase, load_kb
from .session import Session, run_lines
from .situation import dump_situation

__all__ = ["KnowledgeBase", "Session", "dump_situation", "load_kb", "run_lines"]
