"""Regenerates the tiny ONNX fixtures used by the backbone and enhancer tests.

    python3 make_onnx_fixtures.py   (needs torch + onnx)
"""
import os

import torch
import torch.nn as nn

HERE = os.path.dirname(os.path.abspath(__file__))


class TinyBackbone(nn.Module):
    # conv -> relu -> global average pool, 8 features
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 8, 3, padding=1)
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x):
        return torch.flatten(self.pool(torch.relu(self.conv(x))), 1)


class ChannelSwap(nn.Module):
    # 1x1 conv that reverses the channel order
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 3, 1, bias=False)
        with torch.no_grad():
            self.conv.weight.zero_()
            self.conv.weight[0, 2] = 1
            self.conv.weight[1, 1] = 1
            self.conv.weight[2, 0] = 1

    def forward(self, x):
        return self.conv(x)


if __name__ == "__main__":
    torch.manual_seed(0)
    torch.onnx.export(TinyBackbone().eval(), torch.randn(1, 3, 32, 32),
                      os.path.join(HERE, "tiny_backbone.onnx"), opset_version=11, dynamo=False)
    torch.onnx.export(ChannelSwap().eval(), torch.randn(1, 3, 500, 1280),
                      os.path.join(HERE, "channel_swap_enhancer.onnx"), opset_version=11, dynamo=False)
