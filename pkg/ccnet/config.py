# ---
# Default ccnet Configuration
# ---
import os

# ---
# Logging
# ---
# Log verbosity for every ccnet command. The CC_NET_LOG environment
# variable wins over this value.
LOG_LEVEL = os.environ.get('CC_NET_LOG', 'INFO').upper()
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Your Sentry (http://getsentry.com) DSN key. When set, errors logged by
# long training runs are also sent to Sentry.
SENTRY_DSN = None

# ---
# Artifacts
# ---
# Version written into (and required from) binary checkpoint headers.
CHECKPOINT_VERSION = 1

# File names used inside a run directory.
CHECKPOINT_NAME = 'checkpoint.ccnet'
TRAIN_LOG_NAME = 'train.jsonl'
EVAL_REPORT_NAME = 'eval.json'
THRESHOLDS_NAME = 'thresholds.json'
TRACE_LOG_NAME = 'traces.jsonl'
RESOLVED_CONFIG_NAME = 'run.yaml'
ABLATION_TABLE_NAME = 'ablation.csv'
DUMP_NAME = 'abort-dump.json'

# ---
# Model Defaults
# ---
# Four-stage geometry: roi-pooled side length and context padding c per
# stage. The padded box is (1 + c) times the RoI about the same center.
DEFAULT_POOLED_SIZES = (14, 22, 16, 14)
DEFAULT_CONTEXTS = (0.0, 0.5, 0.8, 1.7)

# Channels of the four backbone convolutions. Three 2x2 max pools between
# them give a feature map stride of 8.
DEFAULT_BACKBONE_CHANNELS = (16, 32, 32, 32)
BACKBONE_STRIDE = 8

# Length C1 of every stage feature o_t after global average pooling.
DEFAULT_HEAD_CHANNELS = 64

# Background always lives at class index 0.
BACKGROUND_INDEX = 0

# ---
# Loss Defaults
# ---
# Stage weights: the last stage gets 1, every earlier stage 0.02 / T.
FINAL_STAGE_WEIGHT = 1.0
EARLY_STAGE_WEIGHT = 0.02
# Training-time rejection threshold on the true-class probability.
DEFAULT_TRAIN_THRESHOLD = 0.95
LOG_FLOOR = 1e-12

# ---
# Optimizer Defaults
# ---
DEFAULT_LR = 0.01
DEFAULT_WEIGHT_DECAY = 0.0005
DEFAULT_LR_DECAY_AT = (0.6, 0.85)
DEFAULT_LR_DECAY_FACTOR = 0.1

# ---
# Evaluation Defaults
# ---
NMS_IOU = 0.3
MATCH_IOU = 0.5
# Per-class scores below this never become detections.
SCORE_FLOOR = 0.01

try:
    from local_config import *
except ImportError:
    pass
