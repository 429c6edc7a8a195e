"""Regenerate the committed test fixtures under tests/fixtures/.

XNET is written from its literal weights. The MNIST MLP is a seeded
scikit-learn MLP trained on the 5000-image MNIST sample shipped with mlxtend
(`pip install mlxtend`); the split, pixel scaling and training settings are
recorded in mnist_mlp.meta.json next to the exported files.

    python3 fixtures/export_fixtures.py [--out tests/fixtures]
"""

import argparse
import json
import pathlib

import numpy as np

XNET = {
    "name": "xnet",
    "input_dim": 2,
    "layers": [
        {"weights": [[0.1, -0.6], [-4.3, 4.4], [4.2, -4.2]], "bias": [0.0, 0.0, 0.0], "activation": "relu"},
        {"weights": [[0.4, -4.9, 3.9], [-0.4, 3.9, 4.6]], "bias": [6.7, -7.4], "activation": "linear"},
    ],
}


def export_xnet(out: pathlib.Path) -> None:
    (out / "xnet.json").write_text(json.dumps(XNET, indent=2) + "\n")
    rows = ["label,x0,x1", "1,0.1,0.9", "1,0.05,0.8", "1,0.2,0.75"]
    (out / "three_ones.csv").write_text("\n".join(rows) + "\n")


def write_dataset(path: pathlib.Path, X: np.ndarray, y: np.ndarray) -> None:
    with path.open("w") as f:
        f.write("label," + ",".join(f"x{i}" for i in range(X.shape[1])) + "\n")
        for label, row in zip(y, X):
            f.write(str(int(label)) + "," + ",".join("0" if v == 0 else f"{v:.4f}".rstrip("0").rstrip(".") for v in row) + "\n")


def train_and_export(out: pathlib.Path, train_size: int, test_size: int, hidden: tuple, seed: int) -> None:
    if not hidden:
        raise SystemExit("hidden_dims must be non-empty")
    from mlxtend.data import mnist_data
    from sklearn.neural_network import MLPClassifier

    X, y = mnist_data()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    X = np.round(X[order] / 255.0, 4)
    y = y[order]
    X_train, y_train = X[:train_size], y[:train_size]
    X_test, y_test = X[train_size:train_size + test_size], y[train_size:train_size + test_size]

    clf = MLPClassifier(hidden_layer_sizes=hidden, activation="relu", max_iter=300, random_state=seed)
    clf.fit(X_train, y_train)
    acc = float(clf.score(X_test, y_test))
    if acc < 0.90:
        raise SystemExit(f"held-out accuracy {acc:.3f} below 0.90; nothing exported")

    layers = []
    for i, (W, b) in enumerate(zip(clf.coefs_, clf.intercepts_)):
        last = i == len(clf.coefs_) - 1
        layers.append({"weights": W.T.tolist(), "bias": b.tolist(), "activation": "linear" if last else "relu"})
    model = {"name": "mnist_mlp_" + "x".join(map(str, hidden)), "input_dim": int(X.shape[1]), "layers": layers}
    (out / "mnist_mlp.json").write_text(json.dumps(model) + "\n")

    write_dataset(out / "mnist_train.csv", X_train, y_train)
    write_dataset(out / "mnist_test.csv", X_test, y_test)

    h = X_test[:100]
    for i, (W, b) in enumerate(zip(clf.coefs_, clf.intercepts_)):
        h = h @ W + b
        if i < len(clf.coefs_) - 1:
            h = np.maximum(h, 0.0)
    with (out / "mnist_reference_logits.csv").open("w") as f:
        f.write("index," + ",".join(f"y{j}" for j in range(h.shape[1])) + "\n")
        for i, row in enumerate(h):
            f.write(str(i) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")

    meta = {"source": "mlxtend mnist_data (5000 MNIST images)", "seed": seed, "train_size": train_size,
            "test_size": test_size, "hidden": list(hidden), "pixel_scale": "x/255 rounded to 4 decimals",
            "test_accuracy": acc, "trainer": "sklearn MLPClassifier(max_iter=300)"}
    (out / "mnist_mlp.meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"exported {model['name']} with test accuracy {acc:.3f}")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    parser.add_argument("--train-size", type=int, default=3000)
    parser.add_argument("--test-size", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_xnet(out)
    train_and_export(out, args.train_size, args.test_size, (32, 32), args.seed)


if __name__ == "__main__":
    main()
