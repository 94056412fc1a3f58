"""Theta-weighted random loops on rooted regular trees."""
from .linkproc import Kind, Link, LinkCollision, LinkConfiguration, sample_links
from .looptracer import LoopDecomposition, trace_loops
from .params import ModelParams, alpha_from_beta, beta_from_alpha
from .topology import Graph, build_path, build_tree, from_edges

__all__ = ["Graph", "Kind", "Link", "LinkCollision", "LinkConfiguration", "LoopDecomposition",
           "ModelParams", "alpha_from_beta", "beta_from_alpha", "build_path", "build_tree",
           "from_edges", "sample_links", "trace_loops"]
