"""
Ranking accounts with a trained model
=====================================

Fit a random forest on one half of the accounts and rank the other half by
predicted views per post.  The features are computed from likes, comments
and followers only, so the ranking needs no view counts at prediction time.
"""

import numpy as np

from viewrank import (
    FEATURE_NAMES,
    EstimatorSpec,
    FeatureTable,
    ForestConfig,
    ModelConfig,
    SynthConfig,
    feature_importance,
    generate,
    spearman,
)

data = generate(SynthConfig(n_users=2000, seed=7))
table = FeatureTable.from_dataset(data.dataset())

rng = np.random.default_rng(0)
order = rng.permutation(len(table))
train, test = table.subset(order[:1000]), table.subset(order[1000:])

# RFE trims the eight predictors down to four before the final fit
config = ModelConfig(
    "minimal Random Forest",
    EstimatorSpec("forest", forest=ForestConfig(n_trees=50, seed=7)),
    rfe_target=4,
    seed=7,
)
model = config.fit(train)
print("kept:", ", ".join(FEATURE_NAMES[c] for c in model.columns))
for c, w in zip(model.columns, feature_importance(model.model)):
    print(f"  {FEATURE_NAMES[c]:<20} importance {w:.3f}")

pred = model.predict(test)
print(f"held-out rank correlation: {spearman(test.influence, pred):.3f}")

###############################################################################
# The top of the ranking, next to each account's true views per post

top = np.argsort(-pred, kind="stable")[:10]
print(f"{'user':<8} {'predicted':>10} {'actual':>10}")
for i in top:
    print(f"{test.user_ids[i]:<8} {pred[i]:10.0f} {test.influence[i]:10.0f}")
