"""v2c: a self-contained engine that translates per-frame visual feature
sequences into grammar-free robot command sentences.

The package trains LSTM/GRU encoder-decoder models with hand-derived
gradients (verified against finite differences), evaluates generated
commands with standard captioning metrics, and maps generated words onto a
robot's closed vocabulary.
"""

__version__ = "0.1.0"

from .cells import (CellState, GruParams, LstmParams, cell_backward, gru_step,
                    lstm_step)
from .data import (AnnotationRecord, AnnotationSet, FeatureFile, Sample,
                   load_annotations, load_feature_file, parse_annotations,
                   prepare_sample, sample_frames, split, write_feature_file)
from .errors import DataError, NumericError, UsageError, V2CError
from .kernels import get_backend, set_backend
from .mapper import (MappedCommand, RobotVocabulary, edit_distance,
                     load_robot_vocab, map_command, map_token, similarity)
from .metrics import (Corpus, CorpusItem, EvalReport, bleu, cider, evaluate,
                      make_corpus, meteor_exact, rouge_l)
from .model import (DecodeResult, ModelConfig, ModelParams, batch_loss,
                    decode_greedy, decode_train, encode, init_params,
                    loss_and_gradients, sequence_log_prob, zero_params)
from .numerics import (AdamState, ParamSlot, adam_step, finite_diff_check,
                       masked_cross_entropy, sigmoid, softmax, tanh)
from .train import (TrainConfig, TrainLog, load_checkpoint, save_checkpoint,
                    train)
from .vocab import (EOC_INDEX, EOC_TOKEN, PAD_INDEX, PAD_TOKEN, OneHot,
                    Vocabulary, build_vocab, encode_command, encode_word)
