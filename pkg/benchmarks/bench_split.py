"""Time forest and GBT training with the compiled and pure-Python split kernels.

    python benchmarks/bench_split.py [--n-flaky 300] [--repeat 3]

Both backends must produce the same model; the script checks that too.
"""

import argparse
import json
import time

from flakevocab.evaluate import prepare_corpus
from flakevocab.features import build_features, fit_vocabulary
from flakevocab.lexer import Lexer
from flakevocab.models import BACKENDS, ForestParams, GBTParams, train_gbt, train_random_forest
from flakevocab.synthetic import SyntheticSpec, generate_corpus


def features(n_flaky: int):
    dataset = generate_corpus(0, SyntheticSpec(n_flaky=n_flaky, n_stable=n_flaky))
    docs = prepare_corpus(dataset)
    labels = [t.is_flaky for t in dataset]
    vocab = fit_vocabulary(list(zip(docs, labels)))
    X = build_features(docs, vocab, "bow", list(Lexer().profile.keywords)).to_dense()
    return X, labels


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-flaky", type=int, default=300)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    X, y = features(args.n_flaky)
    print(f"matrix {X.shape[0]} x {X.shape[1]}; backends: {', '.join(sorted(BACKENDS))}")
    jobs = {
        "forest(25 trees)": lambda b: train_random_forest(X, y, ForestParams(n_trees=25), seed=0, backend=b),
        "gbt(20 rounds)": lambda b: train_gbt(X, y, GBTParams(n_rounds=20), backend=b),
    }
    for label, job in jobs.items():
        timings, dumps = {}, set()
        for backend in sorted(BACKENDS):
            timings[backend], model = best_of(lambda: job(backend), args.repeat)
            dumps.add(json.dumps(model.to_dict(), sort_keys=True))
        line = "  ".join(f"{b}={t:.3f}s" for b, t in timings.items())
        if "compiled" in timings:
            line += f"  speedup={timings['python'] / timings['compiled']:.1f}x"
        print(f"{label:<18} {line}  identical={len(dumps) == 1}")


if __name__ == "__main__":
    main()
