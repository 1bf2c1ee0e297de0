//! Acceptance criteria. Each criterion runs in isolation and prints one
//! `[PASS]` / `[FAIL]` line; the target exits nonzero if any fails.
//!
//! Run with `cargo test -p identenc --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use identenc::enrich::prepare;
use identenc::subword::UNKNOWN_ELEMENT;
use identenc::{
    build_path_vocab, build_vocab, encode_tree, enrich, load_env, parse_term, print_term, train_bpe, BpeModel,
    CategorizedIdent, EncoderBundle, IdentCategory, Mode, QualifiedPath, UnseenChars,
};
use rand::seq::SliceRandom;
use rand::Rng;

const ALPHABET: [char; 10] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j'];

fn words(seed: u64, n: usize, max_len: usize) -> Vec<String> {
    let mut r = rng(seed);
    (0..n).map(|_| random_ident(&mut r, &ALPHABET, max_len)).collect()
}

fn greedy_match() -> Result<String, String> {
    let start = Instant::now();
    let model = train_bpe(words(11, 2000, 12), 150);
    let probes = words(12, 500, 16);
    let vocab = model.elements().to_vec();
    for w in &probes {
        let got: Vec<String> = model.tokenize(w, usize::MAX).into_iter().map(str::to_owned).collect();
        let want = longest_match_oracle(&vocab, w, None);
        if got != want {
            return Err(format!("`{w}`: got {got:?}, oracle {want:?}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("500/500 match, {} elements, {:.0} ms", vocab.len(), elapsed.as_secs_f64() * 1e3))
}

fn training_matches_textbook() -> Result<String, String> {
    // Short words over a small alphabet so pair counts tie often.
    let mut r = rng(21);
    let corpus: Vec<String> = (0..50).map(|_| random_ident(&mut r, &ALPHABET[..4], 7)).collect();
    let got = train_bpe(&corpus, 20).merges().to_vec();
    let want = textbook_bpe(&corpus, 20);
    if got != want {
        return Err(format!("got {got:?}\noracle {want:?}"));
    }
    Ok(format!("{} merges identical", got.len()))
}

fn rplus() -> Result<String, String> {
    let merges = vec![("p".into(), "l".into()), ("pl".into(), "u".into()), ("plu".into(), "s".into())];
    let m = BpeModel::from_parts("Rplus".chars(), merges, UnseenChars::Drop)?;
    let got = m.tokenize("Rplus", 8);
    if got != ["R", "plus"] {
        return Err(format!("got {got:?}"));
    }
    Ok("Rplus -> [R, plus]".into())
}

fn thresholding() -> Result<String, String> {
    let prescribed: [(&str, usize); 6] =
        [("alpha", 300), ("beta", 200), ("gamma", 150), ("delta", 100), ("eps", 99), ("zeta", 50)];
    let mut names: Vec<String> = Vec::new();
    for (n, c) in prescribed {
        names.extend(std::iter::repeat_n(n.to_owned(), c));
    }
    let mut i = 0;
    while names.len() < 1000 {
        names.push(format!("rare{i}"));
        i += 1;
    }
    names.shuffle(&mut rng(41));
    let idents: Vec<CategorizedIdent> = names.iter().map(CategorizedIdent::local).collect();

    let mut sizes = Vec::new();
    for t in [1u64, 100, 200] {
        let v = build_vocab(&idents, IdentCategory::Local, t);
        let (kept, below) = count_filter(&names, t);
        let mut ranked: Vec<(&String, &u64)> = kept.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let want: Vec<(&str, u32, u64)> =
            ranked.iter().enumerate().map(|(i, (n, c))| (n.as_str(), i as u32, **c)).collect();
        let got: Vec<(&str, u32, u64)> = v.entries().collect();
        if got != want {
            return Err(format!("threshold {t}: entries differ"));
        }
        if v.export_below_threshold() != &below {
            return Err(format!("threshold {t}: below-threshold export differs"));
        }
        if v.unknown_index() as usize != kept.len() {
            return Err(format!("threshold {t}: unknown index {}", v.unknown_index()));
        }
        sizes.push(v.len());
    }
    if sizes.windows(2).any(|w| w[1] > w[0]) {
        return Err(format!("sizes increase: {sizes:?}"));
    }
    Ok(format!("sizes {sizes:?}"))
}

fn constructor_resolution() -> Result<String, String> {
    let env = load_env(&fs::read_to_string(fixtures().join("env.txt")).unwrap()).map_err(|e| e.to_string())?;
    let table: [(&str, &[&str]); 4] = [
        ("Coq.Init.Datatypes.option", &["Some", "None"]),
        ("Coq.Init.Datatypes.nat", &["O", "S"]),
        ("Coq.Init.Datatypes.list", &["nil", "cons"]),
        ("Top.five", &["c1", "c2", "c3", "c4", "c5"]),
    ];
    let mut pairs = 0;
    for (ind, ctors) in table {
        let p = QualifiedPath::from_dotted(ind).unwrap();
        for (pos, want) in ctors.iter().enumerate() {
            let got = env.resolve_constructor(&p, pos as u32 + 1).map_err(|e| e.to_string())?;
            if got != *want {
                return Err(format!("({ind}, {}) -> {got}, expected {want}", pos + 1));
            }
            pairs += 1;
        }
        for bad in [0, ctors.len() as u32 + 1, ctors.len() as u32 + 7] {
            if env.resolve_constructor(&p, bad).is_ok() {
                return Err(format!("({ind}, {bad}) resolved"));
            }
        }
    }
    let option = QualifiedPath::from_dotted("Coq.Init.Datatypes.option").unwrap();
    if env.resolve_constructor(&option, 1).ok() != Some("Some") {
        return Err("(option, 1) is not Some".into());
    }
    Ok(format!("{pairs} pairs resolved, out-of-range rejected"))
}

fn test_bundle(terms: &[identenc::Term], merges: usize) -> EncoderBundle {
    let ids: Vec<CategorizedIdent> = terms.iter().flat_map(|t| identenc::collect_idents(t).unwrap()).collect();
    let paths: Vec<&QualifiedPath> = ids.iter().filter_map(|c| c.path.as_ref()).collect();
    let names = ids.iter().filter(|c| c.category == IdentCategory::Global).map(|c| c.name.as_str());
    EncoderBundle::new(
        build_vocab(&ids, IdentCategory::Global, 2),
        build_vocab(&ids, IdentCategory::Local, 2),
        build_vocab(&ids, IdentCategory::Constructor, 2),
        build_path_vocab(paths, 2),
        train_bpe(names, merges),
        Mode::Train,
    )
    .unwrap()
}

fn enrichment_round_trip() -> Result<String, String> {
    let gen = TermGen::new();
    let raw = gen.corpus(61, 200, 5);
    let enriched: Vec<_> =
        raw.iter().map(|t| enrich(t, &gen.env)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let bundle = test_bundle(&enriched, 30);
    let mut added = 0;
    for (i, (r, e)) in raw.iter().zip(&enriched).enumerate() {
        let refs = count_reference_nodes(r);
        if e.node_count() != r.node_count() + refs {
            return Err(format!("term {i}: {} != {} + {refs}", e.node_count(), r.node_count()));
        }
        added += refs;
        let reparsed = parse_term(&print_term(e)).map_err(|err| format!("term {i}: {err}"))?;
        if &reparsed != e {
            return Err(format!("term {i}: print/parse changed the term"));
        }
        let a = encode_tree(e, &bundle).map_err(|err| err.to_string())?;
        let b = encode_tree(&reparsed, &bundle).map_err(|err| err.to_string())?;
        if a != b || a.to_json() != b.to_json() {
            return Err(format!("term {i}: re-encoding differs"));
        }
        let (mut ta, mut ea) = (Vec::new(), Vec::new());
        term_arities(e, &mut ta);
        encoded_arities(&a, &mut ea);
        if ta != ea || a.node_count() != e.node_count() {
            return Err(format!("term {i}: encoded tree is not shape-isomorphic"));
        }
        // Enriching again is rejected, preparing again is a no-op.
        if (refs > 0 && enrich(e, &gen.env).is_ok()) || prepare(e.clone(), &gen.env).as_ref() != Ok(e) {
            return Err(format!("term {i}: enrichment is not idempotent"));
        }
    }
    Ok(format!("200 terms, {added} identifier nodes added"))
}

fn token_caps() -> Result<String, String> {
    let model = train_bpe(words(71, 1500, 10), 60);
    let probes = words(72, 1000, 40);
    let mut truncated = 0;
    for w in &probes {
        let train = model.tokenize_train(w);
        let test = model.tokenize_test(w);
        let full = model.tokenize(w, usize::MAX);
        if train.len() > 4 || test.len() > 8 {
            return Err(format!("`{w}`: lengths {} / {}", train.len(), test.len()));
        }
        let k = full.len().min(4);
        if train[..] != full[..k] || test[..k] != train[..] || test[..] != full[..full.len().min(8)] {
            return Err(format!("`{w}`: train {train:?} is not a prefix of test {test:?}"));
        }
        truncated += usize::from(full.len() > 8);
    }
    Ok(format!("1000 identifiers, {truncated} truncated at the test cap"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = identenc::cli::run(std::iter::once("identenc").chain(args.iter().copied()), &mut out, &mut err);
    if code != 0 {
        return Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err)));
    }
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn pipeline_determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = fixtures().join("corpus");
    let env = fixtures().join("env.txt");
    let files: Vec<PathBuf> = ["a.sexp", "b.sexp"].iter().map(|f| corpus.join(f)).collect();
    let orders = [vec![&files[0], &files[1]], vec![&files[1], &files[0]]];
    let mut runs = Vec::new();
    for (i, order) in orders.iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let mut args: Vec<String> = vec!["build".into()];
        for f in order {
            args.extend(["--corpus".into(), f.display().to_string()]);
        }
        args.extend(
            [
                "--env",
                &env.display().to_string(),
                "--out",
                &out.display().to_string(),
                "--threshold-global",
                "1",
                "--threshold-local",
                "1",
                "--threshold-ctor",
                "1",
                "--threshold-path",
                "1",
                "--merges",
                "25",
            ]
            .map(String::from),
        );
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        run_cli(&argv)?;
        let mut enc = argv.clone();
        enc[0] = "encode";
        run_cli(&enc)?;
        runs.push(dir_contents(&out));
    }
    if runs[0] != runs[1] {
        let differing: Vec<_> = runs[0].keys().filter(|k| runs[0].get(*k) != runs[1].get(*k)).collect();
        return Err(format!("outputs differ: {differing:?}"));
    }
    let records = String::from_utf8_lossy(&runs[0]["encoded.jsonl"]).lines().count();
    Ok(format!("{} files byte-identical, {records} records", runs[0].len()))
}

fn unseen_modes() -> Result<String, String> {
    let base = train_bpe(words(91, 800, 10), 80);
    let foreign = ['X', 'Y', '_', '\'', '0', 'é', 'λ', '∀'];
    let mut r = rng(92);
    let mut inputs = Vec::new();
    for i in 0..200 {
        let mut w: Vec<char> = random_ident(&mut r, &ALPHABET, 12).chars().collect();
        let k = 1 + i % 4;
        for _ in 0..k {
            let at = r.gen_range(0..=w.len());
            w.insert(at, *foreign.choose(&mut r).unwrap());
        }
        inputs.push(w.into_iter().collect::<String>());
    }
    let drop = base.clone().with_unseen(UnseenChars::Drop);
    let unk = base.with_unseen(UnseenChars::Unknown);
    for w in &inputs {
        let seen: String = w.chars().filter(|c| ALPHABET.contains(c)).collect();
        let d = drop.tokenize(w, usize::MAX);
        if d.concat() != seen || d.contains(&UNKNOWN_ELEMENT) {
            return Err(format!("drop `{w}`: {d:?}"));
        }
        let u = unk.tokenize(w, usize::MAX);
        let mut unseen = w.chars().filter(|c| !ALPHABET.contains(c));
        let rebuilt: String = u
            .iter()
            .map(|t| {
                if *t == UNKNOWN_ELEMENT {
                    unseen.next().map(String::from).unwrap_or_default()
                } else {
                    t.to_string()
                }
            })
            .collect();
        if rebuilt != *w || unseen.next().is_some() {
            return Err(format!("unknown `{w}`: {u:?}"));
        }
        let ids = unk.token_ids(w, usize::MAX);
        let n_unk = ids.iter().filter(|&&i| i == unk.unknown_id()).count();
        if n_unk != w.chars().filter(|c| !ALPHABET.contains(c)).count() {
            return Err(format!("unknown `{w}`: {n_unk} unknown ids"));
        }
    }
    Ok("200 inputs covered in both modes".into())
}

fn path_elaboration() -> Result<String, String> {
    let pool = ["Coq", "Init", "Datatypes", "Nat", "Arith", "Reals", "Lists", "Top", "Mult", "Peano", "Zarith"];
    let mut r = rng(101);
    // Skew the pool so counts straddle the threshold.
    let train: Vec<QualifiedPath> = (0..400)
        .map(|_| {
            let k = r.gen_range(1..=pool.len());
            random_path(&mut r, &pool[..k])
        })
        .collect();
    let threshold = 60;
    let v = build_path_vocab(&train, threshold);

    let all: Vec<String> = train.iter().flat_map(|p| p.segments().to_vec()).collect();
    let (kept, _) = count_filter(&all, threshold);
    let mut ranked: Vec<(&String, &u64)> = kept.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let index: BTreeMap<&str, u32> = ranked.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i as u32)).collect();
    let unknown = ranked.len() as u32;

    let probes: Vec<QualifiedPath> = (0..100).map(|_| random_path(&mut r, &pool)).collect();
    let mut unknowns = 0;
    for p in &probes {
        let got = v.encode_path(p);
        let want: Vec<u32> = p.segments().iter().map(|s| *index.get(s.as_str()).unwrap_or(&unknown)).collect();
        if got != want || got.len() != p.segments().len() {
            return Err(format!("{p}: got {got:?}, oracle {want:?}"));
        }
        unknowns += got.iter().filter(|&&i| i == unknown).count();
    }
    if unknowns == 0 || unknown == 0 {
        return Err("probe set never exercises both branches".into());
    }
    Ok(format!("100 paths, {} indexed segments, {unknowns} unknown hits", ranked.len()))
}

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("greedy tokenization equals brute-force longest match", greedy_match),
        ("trained merges equal textbook BPE", training_matches_textbook),
        ("Rplus splits into R and plus", rplus),
        ("vocabulary thresholding equals count-filter", thresholding),
        ("constructor resolution by position", constructor_resolution),
        ("enrichment node counts and round-trip", enrichment_round_trip),
        ("train and test token caps", token_caps),
        ("build and encode are deterministic", pipeline_determinism),
        ("unseen characters dropped or marked unknown", unseen_modes),
        ("path encoding equals segment-count oracle", path_elaboration),
    ];
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("[PASS] AC{:<2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("[FAIL] AC{:<2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    std::panic::set_hook(hook);
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
