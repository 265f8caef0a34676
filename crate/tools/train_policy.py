#!/usr/bin/env python3
"""Fit the 12-256-256-4 tanh policy to labelled states and export it in the
simulator's JSON weights format.

Input CSVs come from `overtake-teacher collect` (columns s0..s11, a0..a3,
all normalised). Optionally writes a parity file with random states and the
network's float64 outputs, used by the Rust tests to check the export.
"""

import argparse
import json
import sys

import numpy as np
import torch
from torch import nn

STATE_DIM = 12
ACTION_DIM = 4

# Must match overtake_core::policy::{Norms, ActionBounds} defaults.
NORMS = {
    "s": 1500.0, "s_dot": 85.0, "s_ddot": 25.0,
    "n": 7.5, "n_dot": 85.0, "n_ddot": 25.0,
    "heading": float(np.pi / 2), "gap": 100.0, "rel_s_dot": 35.0,
    "rel_n": 15.0, "rel_n_dot": 85.0, "rel_heading": float(np.pi / 2),
}
ACTION_BOUNDS = {
    "n_min": -6.535, "n_max": 6.535, "n_dot_max": 15.0,
    "n_ddot_max": 25.0, "s_dot_min": 0.0, "s_dot_max": 85.0,
}


def make_net():
    return nn.Sequential(
        nn.Linear(STATE_DIM, 256), nn.Tanh(),
        nn.Linear(256, 256), nn.Tanh(),
        nn.Linear(256, ACTION_DIM), nn.Tanh(),
    )


def load_weights(net, path, mean=None, std=None):
    """Loads exported weights. With `mean`/`std` the first layer is rewritten
    to act on standardised inputs."""
    doc = json.load(open(path))
    linears = [m for m in net if isinstance(m, nn.Linear)]
    with torch.no_grad():
        for k, (lin, layer) in enumerate(zip(linears, doc["layers"])):
            w = torch.tensor(layer["w"], dtype=torch.float64)
            b = torch.tensor(layer["b"], dtype=torch.float64)
            if k == 0 and mean is not None:
                b = b + w @ torch.tensor(mean)
                w = w * torch.tensor(std)
            lin.weight.copy_(w.to(lin.weight.dtype))
            lin.bias.copy_(b.to(lin.bias.dtype))


def export(net, path, metadata, mean, std):
    """Writes weights for raw inputs: the standardisation is folded into the
    first layer."""
    layers = []
    for k, lin in enumerate(m for m in net if isinstance(m, nn.Linear)):
        w = lin.weight.detach().double()
        b = lin.bias.detach().double()
        if k == 0:
            w = w / torch.tensor(std)
            b = b - w @ torch.tensor(mean)
        layers.append({"w": w.tolist(), "b": b.tolist()})
    doc = {
        "architecture": [STATE_DIM, 256, 256, ACTION_DIM],
        "activation": "tanh",
        "layers": layers,
        "norms": NORMS,
        "action_bounds": ACTION_BOUNDS,
        "metadata": metadata,
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def write_parity(weights, path, seed):
    """100 uniform random states and the float64 network outputs for them."""
    net64 = make_net().double()
    load_weights(net64, weights)
    rng = np.random.default_rng(seed)
    states = rng.uniform(-1.0, 1.0, size=(100, STATE_DIM))
    with torch.no_grad():
        outs = net64(torch.tensor(states, dtype=torch.float64)).numpy()
    with open(path, "w") as f:
        json.dump({"states": states.tolist(), "actions": outs.tolist()}, f)


def read_data(paths):
    states, actions = [], []
    for p in paths:
        arr = np.genfromtxt(p, delimiter=",", skip_header=1)
        if arr.ndim == 1:
            arr = arr[None, :]
        states.append(arr[:, 2:2 + STATE_DIM])
        actions.append(arr[:, 2 + STATE_DIM:2 + STATE_DIM + ACTION_DIM])
    return np.concatenate(states), np.concatenate(actions)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", nargs="+", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--init", help="warm start from a weights file")
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--loss", choices=["mse", "l1"], default="mse")
    ap.add_argument("--parity", help="write 100 random states and outputs here")
    ap.add_argument("--meta", default="{}", help="JSON object merged into metadata")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    np.random.seed(args.seed)
    x, y = read_data(args.data)
    # tanh never reaches +-1; saturated targets only slow training down
    y = np.clip(y, -0.995, 0.995)
    # several components barely move in normalised units; train on
    # standardised inputs
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), 1e-3)
    x = (x - mean) / std
    x_t = torch.tensor(x, dtype=torch.float32)
    y_t = torch.tensor(y, dtype=torch.float32)

    net = make_net()
    if args.init:
        load_weights(net, args.init, mean, std)
    opt = torch.optim.Adam(net.parameters(), lr=args.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    n = len(x_t)
    for epoch in range(args.epochs):
        perm = torch.randperm(n)
        total = 0.0
        for i in range(0, n, args.batch):
            idx = perm[i:i + args.batch]
            err = net(x_t[idx]) - y_t[idx]
            loss = err.abs().mean() if args.loss == "l1" else (err ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        sched.step()
        if epoch % 10 == 0 or epoch == args.epochs - 1:
            print(f"epoch {epoch:4d} {args.loss} {total / n:.5f}", file=sys.stderr)

    metadata = {
        "method": "imitation",
        "samples": int(n),
        "epochs": args.epochs,
        "batch": args.batch,
        "lr": args.lr,
        "loss": args.loss,
        "optimizer": "adam, cosine schedule",
        "seed": args.seed,
        "input_standardisation": "folded into the first layer",
    }
    metadata.update(json.loads(args.meta))
    export(net, args.out, metadata, mean, std)

    if args.parity:
        write_parity(args.out, args.parity, args.seed + 1)


if __name__ == "__main__":
    main()
