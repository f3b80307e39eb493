"""Controller synthesis for MDPs in partially known environments under LTL.

Typical pipeline::

    from ltlsynth import load_project, bundled_project, synth_expected
    p = load_project(bundled_project())
    res = synth_expected(p.plant, p.env_models, p.beliefs, p.spec, p.defines)
    res.probability
"""
from .analysis import EndComponent, accepting_mecs, adversarial_amecs, mec_decomposition
from .automata import Dra, RabinPair, dra_step, format_dra, ltl_to_dra, parse_dra_file
from .composition import (CompositeState, ProductModel, add_derived_props, build_belief_mc,
                          build_system_amdp, compose, product_with_dra)
from .errors import SynthError
from .ltl import parse_ltl
from .models import (Amdp, BeliefTable, FinitePath, LabeledMarkovChain, LabeledMdp,
                     enabled_actions, path_probability, validate_beliefs, validate_model)
from .project import bundled_project, load_project
from .simulation import estimate_probability, rollout
from .solver import (SynthPolicy, ValueVector, extract_policy, max_reach_vi, minimax_vi,
                     synth_expected, synth_worstcase)

__version__ = "0.1.0"
