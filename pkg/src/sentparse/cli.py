"""Command-line entry point: learn-grammar, train, classify, evaluate, inspect.

Exit codes: 0 success, 2 input or parse error, 3 configuration error,
4 internal invariant breach.  Logs go to stderr; data to stdout or --out.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields

from .corpus import CorpusError, load_corpus, tokenize
from .evaluation import cross_validate, decode_all
from .grammar import (DEFAULT_LMAX, DEFAULT_TAU_C2, Grammar, GrammarError,
                      NonTerminal, Polarity, load_grammar, parse_pattern,
                      save_grammar)
from .induction import InductionConfig, laplace, learn_grammar, mine_dictionary_rules
from .parser import DEFAULT_BEAM
from .polarity import ConfigurationError, PolarityError, logistic, linear_response
from .ranking import (DEFAULT_ALPHA, DEFAULT_LAMBDA, Weights, load_weights,
                      save_weights, train_ranker)

log = logging.getLogger("sentparse")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    corpus: str = None
    format: str = "tsv"
    grammar: str = None
    weights: str = None
    out: str = None
    tau_f: int = 4
    tau_p: float = 0.7
    tau_delta: float = 0.05
    tau_r: int = 4
    tau_c: float = 0.75
    lmax: int = DEFAULT_LMAX
    iterations: int = 3
    tau_c2: float = None
    beam: int = DEFAULT_BEAM
    iters: int = None
    epochs: float = None
    alpha: float = DEFAULT_ALPHA
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    folds: int = 10
    threads: int = 1
    trees: bool = False
    fallback_label: str = "neg"

    @classmethod
    def from_args(cls, ns):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in names})

    def induction(self):
        try:
            return InductionConfig(
                tau_f=self.tau_f, tau_p=self.tau_p, tau_delta=self.tau_delta,
                tau_r=self.tau_r, tau_c=self.tau_c, l_max=self.lmax,
                iterations=self.iterations, tau_c2=self.resolved_tau_c2)
        except ValueError as e:
            raise ConfigurationError(str(e))

    @property
    def resolved_tau_c2(self):
        return DEFAULT_TAU_C2 if self.tau_c2 is None else self.tau_c2

    @property
    def fallback(self):
        return Polarity(self.fallback_label)

    def snapshot(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _check_training(cfg):
    if cfg.beam < 1:
        raise ConfigurationError("--beam must be >= 1")
    if cfg.alpha <= 0:
        raise ConfigurationError("--alpha must be positive")
    if cfg.lam < 0:
        raise ConfigurationError("--lambda must be >= 0")
    if cfg.iters is not None and cfg.iters < 0:
        raise ConfigurationError("--iters must be >= 0")
    if cfg.tau_c2 is not None and cfg.tau_c2 < 0.5:
        raise ConfigurationError("--tau-c2 must be >= 0.5")
    if cfg.threads < 1:
        raise ConfigurationError("--threads must be >= 1")


def _need(cfg, name):
    if getattr(cfg, name) is None:
        raise InputError("--%s is required" % name)
    return getattr(cfg, name)


def _corpus(cfg):
    corpus = load_corpus(_need(cfg, "corpus"), cfg.format)
    if len(corpus) == 0:
        raise InputError("corpus %s is empty" % cfg.corpus)
    return corpus


def _grammar(cfg):
    g = load_grammar(_need(cfg, "grammar"))
    if cfg.tau_c2 is not None and cfg.tau_c2 != g.tau_c2:
        g = Grammar(g.dictionary, g.combinations, g.l_max, cfg.tau_c2)
    return g


def _write(cfg, text, suffix=""):
    if cfg.out:
        with open(cfg.out + suffix, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    elif not suffix:
        sys.stdout.write(text)


def _write_snapshot(cfg):
    if cfg.out:
        _write(cfg, cfg.snapshot(), ".config.json")


def cmd_learn_grammar(cfg):
    corpus = _corpus(cfg)
    result = learn_grammar(corpus, cfg.induction(), cfg.seed)
    g = result.grammar
    if cfg.out:
        save_grammar(g, cfg.out)
    else:
        save_grammar(g, sys.stdout)
    diag = ["# rule\ttype\ttype_counts\tpairs\tconverged\ttheta"]
    for d in result.diagnostics:
        counts = ",".join("%s:%d" % kv for kv in sorted(d.type_counts.items()))
        diag.append("%s\t%s\t%s\t%d\t%s\t%s" % (
            d.rule_id, d.rule_type, counts, d.n_pairs, d.converged,
            ",".join("%.17g" % t for t in d.theta)))
    for rid in result.dropped:
        diag.append("%s\tdropped\t-\t-\t-\t-" % rid)
    _write(cfg, "\n".join(diag) + "\n", ".diag")
    _write_snapshot(cfg)
    print("|G_D|=%d |G_C|=%d" % (len(g.dictionary), len(g.combinations)),
          file=sys.stdout if cfg.out else sys.stderr)
    return EXIT_OK


def cmd_train(cfg):
    _check_training(cfg)
    corpus = _corpus(cfg)
    grammar = _grammar(cfg)
    weights, stats = train_ranker(corpus, grammar, cfg.beam, iters=cfg.iters,
                                  alpha=cfg.alpha, lam=cfg.lam, seed=cfg.seed,
                                  epochs=cfg.epochs)
    results = decode_all(grammar, [s.tokens for s in corpus], cfg.beam,
                         weights, cfg.fallback, cfg.threads)
    acc = sum(r[0] is s.label for s, r in zip(corpus, results)) / len(corpus)
    logtext = ["steps=%d" % stats.steps, "skipped=%d" % stats.skipped,
               "train_accuracy=%.6f" % acc]
    logtext += ["objective[%d]=%.10g" % (i, v)
                for i, v in enumerate(stats.objective)]
    log.info("training accuracy %.4f, %d of %d steps skipped", acc,
             stats.skipped, stats.steps)
    if cfg.out:
        save_weights(weights, cfg.out)
        _write(cfg, "\n".join(logtext) + "\n", ".log")
        _write_snapshot(cfg)
    else:
        save_weights(weights, sys.stdout)
        print("\n".join(logtext), file=sys.stderr)
    return EXIT_OK


def _input_lines(path):
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return text.splitlines()


def cmd_classify(cfg, input_path=None):
    _check_training(cfg)
    grammar = _grammar(cfg)
    weights = load_weights(cfg.weights) if cfg.weights else Weights()
    token_lists = []
    for n, line in enumerate(_input_lines(input_path), start=1):
        if not line.strip():
            log.warning("line %d: empty, skipped", n)
            continue
        token_lists.append(tokenize(line))
    results = decode_all(grammar, token_lists, cfg.beam, weights, cfg.fallback,
                         cfg.threads)
    out = []
    for label, no_evidence, dist, tree in results:
        cols = [label.value]
        if dist is None:
            cols += ["-", "-"]
        else:
            cols += ["%.6f" % dist.p_neg, "%.6f" % dist.p_pos]
        cols.append("no-evidence" if no_evidence else "-")
        if cfg.trees:
            cols.append(tree or "-")
        out.append("\t".join(cols))
    _write(cfg, "".join(line + "\n" for line in out))
    return EXIT_OK


def cmd_evaluate(cfg):
    _check_training(cfg)
    if cfg.folds < 2:
        raise ConfigurationError("--folds must be >= 2")
    corpus = _corpus(cfg)
    report = cross_validate(
        corpus, cfg.folds, cfg.induction(), seed=cfg.seed, k=cfg.beam,
        iters=cfg.iters, epochs=cfg.epochs, alpha=cfg.alpha, lam=cfg.lam,
        fallback=cfg.fallback, threads=cfg.threads)
    _write(cfg, "\n".join(report.lines()) + "\n")
    _write_snapshot(cfg)
    if cfg.out:
        print("mean_accuracy=%.6f" % report.mean_accuracy)
    return EXIT_OK


def _curve(rule, points=11):
    out = []
    for n in range(points):
        x = n / (points - 1)
        xs = (1.0,) + (x,) * len(rule.slots)
        out.append((x, logistic(linear_response(rule.theta, xs))))
    return out


def _parse_rule_query(query):
    lhs, sep, rhs = query.replace("->", "→").partition("→")
    if not sep:
        return None
    try:
        return NonTerminal(lhs.strip()), parse_pattern(rhs.strip())
    except (ValueError, GrammarError):
        raise InputError("malformed rule query %r" % query)


def cmd_inspect(cfg, query):
    grammar = _grammar(cfg)
    lines = []
    parsed = _parse_rule_query(query)
    if parsed is not None:
        rule = grammar.lookup_combination(*parsed)
        if rule is None:
            print("not found: %s" % query)
            return EXIT_OK
        counts = ",".join("%s:%d" % kv for kv in sorted(rule.type_counts.items()))
        lines.append("rule\t%s" % rule.rule_id)
        lines.append("type\t%s" % rule.rule_type.value)
        lines.append("type_counts\t%s" % (counts or "-"))
        lines.append("theta\t%s" % ",".join("%.6f" % t for t in rule.theta))
        lines.append("# x\tP(%s)" % rule.lhs.value)
        lines += ["%.1f\t%.6f" % xy for xy in _curve(rule)]
    else:
        frag = tuple(tokenize(query))
        rule = grammar.lookup_fragment(frag)
        if rule is None:
            print("not found: %s" % query)
            return EXIT_OK
        lines.append("fragment\t%s" % " ".join(frag))
        lines.append("corrected\t%s\tP(N)=%.4f\tP(P)=%.4f" % (
            rule.lhs.value, rule.dist.p_neg, rule.dist.p_pos))
        naive = "n/a (pass --corpus)"
        if cfg.corpus:
            corpus = _corpus(cfg)
            cfg_naive = InductionConfig(tau_f=1, l_max=len(frag))
            for r in mine_dictionary_rules(corpus, [], cfg_naive):
                if r.fragment == frag:
                    naive = "%s\tP(N)=%.4f\tP(P)=%.4f" % (
                        r.lhs.value, r.dist.p_neg, r.dist.p_pos)
                    break
            else:
                p_neg, p_pos = laplace(0, 0)
                naive = "-\tP(N)=%.4f\tP(P)=%.4f" % (p_neg, p_pos)
        lines.append("naive\t%s" % naive)
    _write(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--corpus", help="labeled corpus (TSV label<TAB>text, or PL05 prefix)")
    a("--format", choices=("tsv", "pl05"), default="tsv")
    a("--grammar", help="grammar file")
    a("--weights", help="ranking weights file")
    a("--out", help="primary output path (default: stdout)")
    a("--tau-f", dest="tau_f", type=int, default=4)
    a("--tau-p", dest="tau_p", type=float, default=0.7)
    a("--tau-delta", dest="tau_delta", type=float, default=0.05)
    a("--tau-r", dest="tau_r", type=int, default=4)
    a("--tau-c", dest="tau_c", type=float, default=0.75)
    a("--lmax", type=int, default=DEFAULT_LMAX)
    a("--iterations", type=int, default=3, help="outer induction loop T")
    a("--tau-c2", dest="tau_c2", type=float,
      help="slot confidence floor (default %s, or the grammar's own)"
      % DEFAULT_TAU_C2)
    a("--beam", type=int, default=DEFAULT_BEAM)
    a("--iters", type=int, help="ranker updates S (overrides --epochs)")
    a("--epochs", type=float, help="ranker budget in corpus passes")
    a("--alpha", type=float, default=DEFAULT_ALPHA)
    a("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    a("--seed", type=int, default=0)
    a("--folds", type=int, default=10)
    a("--threads", type=int, default=1)
    a("--trees", action="store_true")
    a("--fallback-label", dest="fallback_label", choices=("neg", "pos"),
      default="neg")
    a("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sentparse",
                                description="Sentiment grammar parser.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("learn-grammar", parents=[common])
    sub.add_parser("train", parents=[common])
    c = sub.add_parser("classify", parents=[common])
    c.add_argument("input", nargs="?", help="one sentence per line (default stdin)")
    sub.add_parser("evaluate", parents=[common])
    i = sub.add_parser("inspect", parents=[common])
    i.add_argument("query", help="fragment, or rule such as 'N→not [P]'")
    return p


def main(argv=None):
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig.from_args(ns)
    try:
        if ns.command == "learn-grammar":
            return cmd_learn_grammar(cfg)
        if ns.command == "train":
            return cmd_train(cfg)
        if ns.command == "classify":
            return cmd_classify(cfg, ns.input)
        if ns.command == "evaluate":
            return cmd_evaluate(cfg)
        return cmd_inspect(cfg, ns.query)
    except ConfigurationError as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG
    except (InputError, CorpusError, GrammarError, OSError, ValueError) as e:
        log.error("input error: %s", e)
        return EXIT_INPUT
    except (PolarityError, AssertionError, ArithmeticError) as e:
        log.error("internal invariant breach: %s", e)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
