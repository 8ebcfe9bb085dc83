from .config import PipelineConfig, load_config
from .stages import Pipeline, run
from .users import CohortEvaluation, UserClusters, cluster_users, cohort_purity

__all__ = ["PipelineConfig", "load_config", "Pipeline", "run", "CohortEvaluation",
           "UserClusters", "cluster_users", "cohort_purity"]
