"permubench - permuted-image CNN/MLP experiment engine"
