#!/usr/bin/env python3
# Copyright 2026 The ssnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Convert torchvision ResNet weights into an ssnet archive.

The C++ runtime keeps batch-norm layers in inference form, so this script
folds each BN's (gamma, beta, running_mean, running_var) into a per-channel
affine: scale = gamma / sqrt(var + eps), shift = beta - mean * scale.

Usage:
  python scripts/convert_backbone.py --arch wide_resnet50_2 --out wrn50_2.ssna
  python scripts/convert_backbone.py --arch resnet50 --source my.pth --out r50.ssna

Without --source the pretrained ImageNet weights are fetched through
torchvision. The result is referenced from a run config as
  "backbone": {"name": "wide_resnet50_2", "weights": "file:wrn50_2.ssna"}
"""

import argparse
import io
import json
import struct
import sys

import numpy as np

MAGIC = b"SSNA0001"
BN_EPS = 1e-5  # torchvision BatchNorm2d default
ARCHS = ("wide_resnet50_2", "resnet50")
BLOCKS_PER_LAYER = (3, 4, 6, 3)


def fold_bn(sd, prefix):
    gamma = sd[prefix + ".weight"].astype(np.float64)
    beta = sd[prefix + ".bias"].astype(np.float64)
    mean = sd[prefix + ".running_mean"].astype(np.float64)
    var = sd[prefix + ".running_var"].astype(np.float64)
    scale = gamma / np.sqrt(var + BN_EPS)
    shift = beta - mean * scale
    return scale.astype(np.float32), shift.astype(np.float32)


def convert(sd):
    """Maps a torchvision ResNet state dict onto ssnet parameter names."""
    out = []  # list of (name, float32 ndarray)

    def put(name, arr):
        out.append((name, np.ascontiguousarray(arr, dtype=np.float32)))

    put("stem.conv.w", sd["conv1.weight"])
    scale, shift = fold_bn(sd, "bn1")
    put("stem.bn.scale", scale)
    put("stem.bn.shift", shift)

    for layer, blocks in enumerate(BLOCKS_PER_LAYER, start=1):
        for b in range(blocks):
            tp = f"layer{layer}.{b}"  # identical prefix on both sides
            for k in (1, 2, 3):
                put(f"{tp}.conv{k}.w", sd[f"{tp}.conv{k}.weight"])
                scale, shift = fold_bn(sd, f"{tp}.bn{k}")
                put(f"{tp}.bn{k}.scale", scale)
                put(f"{tp}.bn{k}.shift", shift)
            if f"{tp}.downsample.0.weight" in sd:
                put(f"{tp}.down.conv.w", sd[f"{tp}.downsample.0.weight"])
                scale, shift = fold_bn(sd, f"{tp}.downsample.1")
                put(f"{tp}.down.bn.scale", scale)
                put(f"{tp}.down.bn.shift", shift)
    return out


def write_archive(path, tensors):
    index = []
    offset = 0
    for name, arr in tensors:
        index.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "f32",
            "offset": offset,
        })
        offset += arr.nbytes
    header = json.dumps(
        {"kind": "weights", "format": "ssnet.archive.v1", "meta": {}, "tensors": index},
        separators=(",", ":"),
    ).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for _, arr in tensors:
            f.write(arr.tobytes())
    return offset + len(header) + 16


def load_state_dict(arch, source):
    import torch

    if source:
        obj = torch.load(source, map_location="cpu", weights_only=True)
        sd = obj.get("state_dict", obj) if isinstance(obj, dict) else obj
    else:
        import torchvision.models as models

        weights = {
            "wide_resnet50_2": models.Wide_ResNet50_2_Weights.IMAGENET1K_V1,
            "resnet50": models.ResNet50_Weights.IMAGENET1K_V1,
        }[arch]
        sd = weights.get_state_dict(progress=True)
    return {k: v.detach().cpu().numpy() for k, v in sd.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arch", choices=ARCHS, required=True)
    ap.add_argument("--source", help="local .pth file; defaults to the torchvision release")
    ap.add_argument("--out", required=True, help="output archive path (.ssna)")
    args = ap.parse_args()

    sd = load_state_dict(args.arch, args.source)
    tensors = convert(sd)
    total = write_archive(args.out, tensors)
    print(f"wrote {args.out}: {len(tensors)} tensors, {total / 1e6:.1f} MB")


if __name__ == "__main__":
    sys.exit(main())
