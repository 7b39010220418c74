"""Default experiment configuration."""

TOY_DEFAULTS = {
    "taus_deg": (0.0, 45.0, 135.0),
    "sigma2": 0.15,          # Noise variance of the distractor
    "n": 10000,
    "artifact_fraction_in_A": 0.5,
    "rng_seed": 0,
    "probe_noise_sigmas": 2.0,   # Distractor noise of the corrected sample, in standard deviations
}

DATASET_DEFAULTS = {
    "num_classes": 10,
    "shape": (1, 16, 16),            # Box / shift experiments
    "color_shape": (3, 14, 14),      # Colour-tint experiments
    "n_train_per_class": 500,
    "n_test_per_class": 100,
    "noise_sigma": 0.1,
    "template_peak": 0.9,            # Brightest template pixel before noise
    "dataset_seed": 0,
}

# Per-attack dataset overrides for the controlled suite
SUITE_DATASET_DEFAULTS = {
    "clever_hans": {"noise_sigma": 0.3, "template_peak": 0.35},
    "backdoor": {"n_train_per_class": 1000},
}

ARTIFACT_DEFAULTS = {
    "box_size": 4,
    "box_value": 1.0,
    "shift_factor": 0.2,
    "shift_source_class": 8,
    "color_index": 0,
    "clamp_range": (0.0, 1.0),
}

SVM_DEFAULTS = {
    "regularization": 1e-3,
    "epochs": 200,
    "batch_size": 64,
    "tail_fraction": 0.5,    # Share of final epochs whose iterates are averaged
    "monotone_tolerance": 1e-3,  # Allowed rise of the averaged tail objective, relative to max(1, |objective|)
    "rng_seed": 0,
}

OPTIMIZER_DEFAULTS = {
    "kind": "adadelta",
    "lr": 1.0,
    "rho": 0.9,
    "eps": 1e-6,
    "per_epoch_lr_factor": 0.7,
    "epochs": 6,
    "batch_size": 64,
    "rng_seed": 0,
}

FINETUNE_DEFAULTS = {
    "epochs": 5,
    "subset_fraction": 0.5,
}

SUITE_DEFAULTS = {
    "attack": "clever_hans",
    "artifact": "box",
    "r_ch": 0.1,
    "r_bd": 0.01,
    "r_p": 1.0,
    "targets": (0, 1, 2),
    "seeds": (0, 1, 2),
    "cav_kinds": ("filter", "pattern_gt", "pattern_pred"),
    "corrections": ("original", "baseline", "aclarc", "pclarc"),
    "hook_points": ("input", "layer1"),
    "jobs": 1,
}

GRADCHECK_DEFAULTS = {
    "epsilon": 1e-5,
    "tolerance": 1e-4,
    "kink_margin": 1e-4,
}

CONCEPT_DEFAULTS = {
    "variance_floor": 1e-12,
    "unit_tolerance": 1e-9,
}
