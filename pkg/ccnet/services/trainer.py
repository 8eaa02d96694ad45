# -*- coding: utf8 -*-
"""
The joint training loop: backbone, stage heads, chaining scales, every
classifier and the box regressor learn together from one loss.
"""
__all__ = ('Trainer', 'TrainResult', 'Batch', 'train')
import os
import json
import logging
from collections import namedtuple

import numpy as np

from ccnet import config
from ccnet.autograd import checkpoint, ops
from ccnet.autograd.optim import lr_at, sgd_step, zero_grad
from ccnet.errors import ConfigurationError, NumericError, TrainingAborted
from ccnet.models.objective import LossReport, total_loss
from ccnet.services.dataset import dataset_split
from ccnet.services.proposals import gen_proposals, stack_targets
from ccnet.services.steplog import StepLog
from ccnet.signals import checkpoint_saved, step_completed, training_aborted

logger = logging.getLogger(__name__)

#: One image's training input: boxes are `Box` proposals, labels [N] and
#: regression targets [N, 4].
Batch = namedtuple('Batch', ['image', 'boxes', 'labels', 'offsets', 'seed'])
TrainResult = namedtuple('TrainResult', ['net', 'reports', 'checkpoint'])


def _merge(reports, step):
    """
    Average the per-image reports of one step; mask counts add up.
    """
    n = float(len(reports))
    return LossReport(
        np.sum([r.cls_per_stage for r in reports], axis=0) / n,
        np.sum([r.mask_counts for r in reports], axis=0),
        sum(r.loc for r in reports) / n,
        sum(r.total for r in reports) / n,
        step=step
    )


class Trainer(object):
    def __init__(self, net, loss_cfg, lr=config.DEFAULT_LR,
                 weight_decay=config.DEFAULT_WEIGHT_DECAY, steps=1,
                 decay_at=config.DEFAULT_LR_DECAY_AT,
                 decay_factor=config.DEFAULT_LR_DECAY_FACTOR,
                 run_dir=None):
        if loss_cfg.T != net.stages:
            raise ConfigurationError(
                'loss is set up for {0} stages, the network has {1}'.format(
                    loss_cfg.T, net.stages
                )
            )
        self.net = net
        self.loss_cfg = loss_cfg
        self.lr = lr
        self.weight_decay = weight_decay
        self.steps = steps
        self.decay_at = decay_at
        self.decay_factor = decay_factor
        self.run_dir = run_dir
        self.params = list(net.parameters())

    def lr_for(self, step):
        return lr_at(step, self.steps, self.lr, self.decay_at,
                     self.decay_factor)

    def step(self, step, batches):
        """
        One SGD step over `batches` (a list of `Batch`). The loss of every
        image is scaled by 1 / len(batches) so gradients average.
        """
        zero_grad(self.params)
        reports = []
        scale = 1.0 / len(batches)
        for batch in batches:
            try:
                out = self.net.forward(batch.image, batch.boxes)
                loss, report = total_loss(
                    out.probs, batch.labels, out.regression, batch.offsets,
                    self.loss_cfg, step=step
                )
                if not np.isfinite(loss.item()):
                    raise NumericError('loss is {0}'.format(loss.item()))
                ops.scale(loss, scale).backward()
            except NumericError as e:
                self._abort(step, batch, e)
            reports.append(report)

        sgd_step(self.params, self.lr_for(step), self.weight_decay)
        report = _merge(reports, step)
        step_completed.send(self, report=report)
        return report

    def _abort(self, step, batch, error):
        dump_path = None
        if self.run_dir:
            dump_path = os.path.join(self.run_dir, config.DUMP_NAME)
            with open(dump_path, 'w') as fout:
                json.dump({
                    'step': step,
                    'error': str(error),
                    'image_seed': batch.seed,
                    'boxes': [b.to_list() for b in batch.boxes],
                    'labels': [int(k) for k in batch.labels],
                    'offsets': batch.offsets.tolist(),
                    'lr': self.lr_for(step)
                }, fout, indent=1)
        logger.error('Training aborted at step %d: %s', step, error,
                     extra={'data': {'step': step, 'dump': dump_path}})
        training_aborted.send(self, dump_path=dump_path)
        raise TrainingAborted(
            'non-finite values at step {0}: {1}'.format(step, error),
            dump_path=dump_path
        )

    def save(self, step):
        path = os.path.join(self.run_dir, config.CHECKPOINT_NAME)
        checkpoint.save(path, self.params)
        checkpoint_saved.send(self, path=path, step=step)
        logger.debug('Checkpoint at step %d -> %s', step, path)
        return path


def make_batches(scenes, cfg, seed, step):
    """
    The images of training step `step`: a fresh permutation of `scenes`
    every epoch, with new proposals every step.
    """
    data = cfg.data
    per_step = cfg.optimizer.images_per_step
    batches = []
    for j in range(per_step):
        position = step * per_step + j
        epoch, offset = divmod(position, len(scenes))
        order = np.random.default_rng([seed, epoch]).permutation(len(scenes))
        scene = scenes[order[offset]]
        proposals = gen_proposals(
            scene, data.proposals_per_image, data.jitter, data.neg_fraction,
            seed=[seed, step, j]
        )
        boxes, labels, offsets = stack_targets(proposals)
        batches.append(Batch(scene.image, boxes, labels, offsets, scene.seed))
    return batches


def train(cfg, mode, seed, run_dir=None, scenes=None):
    """
    Train `mode` on the synthetic training split of `seed`.

    Writes ``train.jsonl`` and the checkpoint into `run_dir` when given.
    Equal config and seed give bit-identical checkpoints.
    """
    net = mode.build(cfg, seed)
    if scenes is None:
        scenes = dataset_split(cfg, seed, 'train')
    if not scenes:
        raise TrainingAborted('the training split is empty')

    opt = cfg.optimizer
    trainer = Trainer(
        net, mode.loss_config(cfg),
        lr=opt.lr,
        weight_decay=opt.weight_decay,
        steps=opt.steps,
        decay_at=opt.decay_at,
        decay_factor=opt.decay_factor,
        run_dir=run_dir
    )

    log = None
    if run_dir:
        if not os.path.isdir(run_dir):
            os.makedirs(run_dir)
        log = StepLog(
            os.path.join(run_dir, config.TRAIN_LOG_NAME), sender=trainer
        )

    logger.info('Training %s (seed %d): %d steps, %d parameters',
                mode.SERVICE_ID, seed, opt.steps,
                sum(p.size for p in trainer.params))
    reports = []
    path = None
    every = cfg.train.checkpoint_every
    try:
        for step in range(opt.steps):
            report = trainer.step(step, make_batches(scenes, cfg, seed, step))
            reports.append(report)
            if run_dir and every and (step + 1) % every == 0:
                path = trainer.save(step + 1)
            if step % 50 == 0:
                logger.info('step %d loss %.4f', step, report.total)
        if run_dir and (not every or not opt.steps or opt.steps % every):
            path = trainer.save(opt.steps)
    finally:
        if log is not None:
            log.close()
    return TrainResult(net, reports, path)
