import logging

import numpy as np
import torch
from torch import nn

from granger_dr.core.regression import FittedRegressor, RegressorKind

logger = logging.getLogger(__name__)


class MlpModel(FittedRegressor):
    """Two-layer tanh network trained full-batch on standardized inputs.

    Targets are centred and scaled for training and mapped back on prediction.
    """

    backend = RegressorKind.MLP.value

    def __init__(self, spec, standardizer, network, target_mean, target_scale):
        super().__init__(spec, standardizer)
        self.network = network
        self.target_mean = target_mean
        self.target_scale = target_scale

    def _predict_standardized(self, standardized):
        with torch.no_grad():
            inputs = torch.as_tensor(standardized, dtype=torch.float64)
            outputs = self.network(inputs).squeeze(-1).numpy()
        return outputs * self.target_scale + self.target_mean

    @classmethod
    def fit(cls, spec, standardizer, features, targets):
        generator = torch.Generator().manual_seed(int(spec.seed))
        width = features.shape[1]
        network = nn.Sequential(
            nn.Linear(width, spec.mlp_hidden),
            nn.Tanh(),
            nn.Linear(spec.mlp_hidden, 1),
        ).to(torch.float64)
        with torch.no_grad():
            for layer in network:
                if isinstance(layer, nn.Linear):
                    bound = 1.0 / np.sqrt(layer.in_features)
                    layer.weight.uniform_(-bound, bound, generator=generator)
                    layer.bias.uniform_(-bound, bound, generator=generator)

        target_mean = float(np.mean(targets))
        target_scale = float(np.std(targets)) or 1.0
        inputs = torch.as_tensor(standardizer.transform(features), dtype=torch.float64)
        outputs = torch.as_tensor(
            (targets - target_mean) / target_scale, dtype=torch.float64
        ).unsqueeze(-1)

        optimizer = torch.optim.Adam(network.parameters(), lr=spec.mlp_learning_rate)
        loss_fn = nn.MSELoss()
        for epoch in range(spec.mlp_epochs):
            optimizer.zero_grad()
            loss = loss_fn(network(inputs), outputs)
            loss.backward()
            optimizer.step()
        logger.debug(f"MLP trained for {spec.mlp_epochs} epochs, final loss {loss.item():.4e}")

        network.eval()
        return cls(spec, standardizer, network, target_mean, target_scale)
