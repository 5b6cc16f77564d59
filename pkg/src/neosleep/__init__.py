"""Single-channel EEG sleep-wake classification with Hjorth features and boosted trees."""

from .boosting import GbtModel, Hyperparams, predict_label, predict_proba, predict_score, train
from .dataio import Annotation, EegRecord, Epoch, Stage, SynthConfig, generate_synthetic, label_and_filter, load_record, segment
from .evaluation import confusion, cross_validate, kfold_split, metrics, roc
from .features import FeatureVector, featurize, hjorth, spectral_features, time_features
from .filtering import FirFilter, apply, design_bandpass, frequency_response
from .tuning import SearchSpace, random_search, sample_candidates

__version__ = "0.1.0"
