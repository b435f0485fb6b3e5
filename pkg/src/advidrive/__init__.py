"""Language-advised driving controller on a synthetic driving world.

Subpackages:
    autodiff    reverse-mode AD engine the whole model runs on
    world       synthetic driving world, expert driver, episode datasets
    encoders    image preprocessing, convolutional encoder, advice encoder
    controller  fusion, spatial attention, control LSTM, output heads
    objective   training losses and evaluation metrics
    harness     training/evaluation runners, checkpoints, sweeps, CLI
    bridge      HTTP session service for live advised rollouts
"""

__version__ = "0.1.0"
