"""spamkit: hybrid rule-and-model SMS spam detection toolkit."""

from .corpus import (
    Corpus,
    CorpusFormat,
    DatasetSplit,
    Label,
    LabeledMessage,
    Source,
    downsample_majority,
    load_corpus,
    merge_corpora,
    save_corpus,
    stratified_split,
)
from .preprocess import (
    EncodedSequence,
    PreprocessConfig,
    SubwordVocab,
    TokenizedMessage,
    encode_sequence,
    normalize,
    wordpiece_tokenize,
)
from .stemmer import porter_stem
from .rules import (
    Rule,
    RuleCategory,
    RuleSet,
    RuleVerdict,
    default_ruleset,
    detect_short_links,
    load_rules,
    match_message,
)
from .vectorize import (
    DocumentTermMatrix,
    MatrixKind,
    Vocabulary,
    bow_matrix,
    build_vocabulary,
    tfidf_matrix,
)
from .embed import embed_corpus, file_backed_provider, hashed_ngram_provider
from .classify import (
    FeatureKind,
    FeatureMatrix,
    ModelKind,
    TrainedModel,
    fit_gradient_boosting,
    fit_linear_svm,
    fit_logistic_regression,
    fit_model,
    fit_naive_bayes,
    fit_random_forest,
)
from .evaluate import (
    ComparisonTable,
    ConfusionMatrix,
    EvalReport,
    compare_models,
    confusion,
    metrics,
    timed,
)
from .pipeline import (
    EmbeddingSpec,
    FeaturizerKind,
    PipelineConfig,
    Stage,
    TrainedPipeline,
    Verdict,
    evaluate_pipeline,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)

__version__ = "0.1.0"
