"""Corpus ingestion, the extraction pipeline, batch evaluation and the CLI."""
from .batch import BatchSummary, ItemFailure, evaluate_record, run_batch, summarize
from .config import Settings, load_settings
from .corpus import CorpusRecord, SkippedItem, load_corpus
from .pipeline import ExtractionResult, extract_graph, extract_graph_detailed, write_extraction
from .stats import CorrelationResult, correlation_matrix, histogram
