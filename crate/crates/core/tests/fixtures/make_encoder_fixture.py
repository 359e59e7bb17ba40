"""Builds encoder.json and encoder_expected.json for the encoder round-trip test.

The network follows the trainer's encoder layout (four conv blocks with batch
norm and relu, max pool after the first, average pool after the third, dense
32-value head). Windows are generated from an integer formula that the Rust
test reproduces, so only the latents are stored.
"""

import json
from pathlib import Path

import torch
from torch import nn

HERE = Path(__file__).parent
N_WINDOWS = 100
SIZE = 64


def window(i):
    w = torch.zeros(SIZE, SIZE, dtype=torch.float64)
    for y in range(SIZE):
        for x in range(SIZE):
            w[y, x] = ((x * 7 + y * 13 + i * 31) % 17) / 17.0 if (x + i) % 5 and (y * i) % 7 else 0.0
    return w


def build():
    torch.manual_seed(0)
    net = nn.Sequential(
        nn.Conv2d(1, 4, 3, stride=2, padding=1), nn.BatchNorm2d(4), nn.ReLU(), nn.MaxPool2d(2),
        nn.Conv2d(4, 8, 3, padding=1), nn.BatchNorm2d(8), nn.ReLU(),
        nn.Conv2d(8, 8, 3, padding=1), nn.BatchNorm2d(8), nn.ReLU(), nn.AvgPool2d(2),
        nn.Conv2d(8, 4, 3, padding=1), nn.BatchNorm2d(4), nn.ReLU(),
        nn.Flatten(), nn.Linear(4 * 8 * 8, 32),
    )
    for m in net:
        if isinstance(m, nn.BatchNorm2d):
            m.running_mean.uniform_(-0.2, 0.2)
            m.running_var.uniform_(0.5, 1.5)
            m.weight.data.uniform_(0.5, 1.5)
            m.bias.data.uniform_(-0.1, 0.1)
    return net.eval()


def flat(t):
    return [float(v) for v in t.detach().reshape(-1).tolist()]


def export(net):
    layers, mods, i = [], list(net), 0
    while i < len(mods):
        m = mods[i]
        relu = i + 1 < len(mods) and isinstance(mods[i + 1], nn.ReLU)
        if isinstance(m, nn.Conv2d):
            layers.append({"type": "conv2d", "shape": list(m.weight.shape), "stride": m.stride[0],
                           "padding": m.padding[0], "weights": flat(m.weight), "bias": flat(m.bias),
                           "activation": "identity"})
        elif isinstance(m, nn.BatchNorm2d):
            relu = isinstance(mods[i + 1], nn.ReLU)
            layers.append({"type": "batch_norm", "shape": [m.num_features], "weights": flat(m.weight),
                           "bias": flat(m.bias), "running_mean": flat(m.running_mean),
                           "running_var": flat(m.running_var), "eps": m.eps,
                           "activation": "relu" if relu else "identity"})
        elif isinstance(m, (nn.MaxPool2d, nn.AvgPool2d)):
            k = m.kernel_size if isinstance(m.kernel_size, int) else m.kernel_size[0]
            s = m.stride if isinstance(m.stride, int) else m.stride[0]
            layers.append({"type": "max_pool" if isinstance(m, nn.MaxPool2d) else "avg_pool",
                           "shape": [k, k], "stride": s})
        elif isinstance(m, nn.Linear):
            layers.append({"type": "dense", "shape": [m.out_features, m.in_features],
                           "weights": flat(m.weight), "bias": flat(m.bias), "activation": "identity"})
        i += 1
    return {"layers": layers}


def main():
    net = build()
    (HERE / "encoder.json").write_text(json.dumps(export(net)))
    with torch.no_grad():
        xs = torch.stack([window(i) for i in range(N_WINDOWS)]).unsqueeze(1).float()
        latents = net(xs).double().tolist()
    (HERE / "encoder_expected.json").write_text(json.dumps(latents))


if __name__ == "__main__":
    main()
