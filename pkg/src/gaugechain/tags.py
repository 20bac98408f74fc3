"""Column tags for emitted tables.

The output contract names every CSV column after the identity it records;
code refers to the descriptive keys and looks the tag up here.
"""

TAGS = {
    "partition_defect": "eq_1_8_defect",
    "pressure_phi": "eq_1_8_pressure_phi",
    "pressure_full": "eq_1_8_pressure_full",
    "pressure_fixed": "eq_2_7_pressure_fixed",
    "fixed_pressure_gap": "eq_2_7_gap",
    "fixed_pressure_width": "eq_2_7_width",
    "mean_entropy": "eq_2_3_mean_entropy",
    "entropy_split_defect": "lemma_2_1_defect",
    "entropy_split_excess": "lemma_2_1_excess",
    "log_max_irrep_dim": "eq_2_5_log_max_irrep_dim",
    "block_dim_defect": "eq_2_1_dim_defect",
    "num_blocks": "eq_2_1_num_blocks",
    "expectation_gap": "eq_3_7_gap",
    "restriction_gap": "eq_3_8_gap",
    "restriction_gap_defect": "eq_3_8_closed_form_defect",
    "restriction_shift_excess": "lemma_3_2_excess",
    "derivation_norm": "prop_1_1_derivation_norm",
    "derivation_bound": "prop_1_1_bound",
    "triple_norm": "prop_1_1_triple_norm",
    "zero_norm": "prop_1_1_zero_norm",
    "derivative_fd": "eq_3_3_finite_difference",
    "derivative_energy": "eq_3_3_energy_density",
    "derivative_defect": "eq_3_3_defect",
    "variational_defect": "eq_1_5_variational_defect",
    "variational_split_defect": "eq_1_5_split_defect",
    "variational_alt_defect": "eq_1_5_alternative_defect",
    "weak_gibbs_residual": "eq_1_4_weak_gibbs_residual",
    "chain_rel_fixed": "thm_3_1_rel_fixed",
    "chain_rel_full": "thm_3_1_rel_full",
    "chain_proxy": "thm_3_1_proxy",
    "chain_entropy_full": "thm_3_1_entropy_full",
    "chain_entropy_fixed": "thm_3_1_entropy_fixed",
    "chain_max_gap": "thm_3_1_max_gap",
    "chain_average_defect": "eq_3_5_defect",
    "entropy_gap": "eq_3_6_entropy_gap",
    "entropy_gap_excess": "eq_3_6_excess",
    "fixed_vs_full_entropy": "sec_5_2_entropy_gap",
    "log_ratio": "lemma_4_2_log_ratio",
    "log_ratio_bound": "lemma_4_2_bound",
    "log_ratio_violation": "lemma_4_2_violation",
    "aep_psi_mass": "lemma_4_2_aep_psi_mass",
    "aep_ref_mass": "lemma_4_2_aep_ref_mass",
}

# exponent variants: descriptive key -> column tag
EXPONENT_TAGS = {
    "proxy_product_fixed": "eq_4_1_exponent",
    "gibbs_product_fixed": "eq_4_2a_exponent",
    "gibbs_product_full": "eq_4_2b_exponent",
    "proxy_trace_fixed": "eq_4_3a_exponent",
    "gibbs_trace_fixed": "eq_4_3b_exponent",
    "proxy_trace_full": "eq_4_4a_exponent",
    "gibbs_trace_full": "eq_4_4b_exponent",
    "proxy_product_full": "eq_5_1_exponent",
}


def tag(key: str) -> str:
    return TAGS[key]
