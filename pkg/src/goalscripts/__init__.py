"""Goal-oriented script construction: corpora, tasks, scorers, pipeline, metrics."""

from .corpus import (
    Corpus,
    CorpusError,
    CrossLanguageLink,
    MalformedRecordError,
    Script,
    corpus_stats,
    parse_article,
    project_ordered_labels,
    split_corpus,
)
from .events import (
    EventInstance,
    Ontology,
    OntologyTemplate,
    build_event_pool,
    construct_narrative,
    instantiate_template,
)
from .metrics import (
    MetricError,
    MetricReport,
    accuracy,
    edit_metrics,
    evaluate_run,
    ndcg_at_k,
    ordering_tau,
    perplexity_aggregate,
    recall_at_k,
    script_tau,
)
from .pipeline import (
    ConstructedScript,
    PipelineError,
    TrainingPair,
    construct,
    emit_inference_training_data,
    emit_ordering_training_data,
    order_steps,
    retrieve_steps,
    save_training_pairs,
    take_above_threshold,
    take_top_l,
)
from .scorers import (
    LexicalScorer,
    OracleOrderer,
    OracleRelevanceScorer,
    PairOrderer,
    PositionOrderer,
    RandomOrderer,
    RandomRelevanceScorer,
    RelevanceScorer,
    RemoteScorer,
    ScorerConfig,
    ScorerError,
    ScorerProtocolError,
    ScorerTransportError,
    build_lexical_scorer,
    build_position_orderer,
)
from .task import (
    CandidateStep,
    EsdScenario,
    TaskError,
    TaskInstance,
    build_retrieval_task,
    convert_esd,
)

__version__ = "0.1.0"
