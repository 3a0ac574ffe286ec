import init, { keyspace, run_session, bruteforce } from "./pkg/gsdp_zkp_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function showKeyspace() {
  guarded($("ks-out"), () => {
    const r = JSON.parse(keyspace(num("ks-p"), num("ks-d")));
    $("ks-out").textContent =
      `published product  ${r.cardinality_paper}  (2^${r.bits_paper.toFixed(3)}, about ${Math.round(r.bits_paper)} bits)\n` +
      `distinct nonzero   ${r.cardinality_derived}  (2^${r.bits_derived.toFixed(3)}, about ${Math.round(r.bits_derived)} bits)`;
  });
}

function showSession() {
  guarded($("s-summary"), () => {
    const t0 = performance.now();
    const r = JSON.parse(run_session(num("s-p"), num("s-d"), num("s-t"), num("s-seed"), $("s-fake").checked));
    const ms = (performance.now() - t0).toFixed(1);
    $("s-summary").textContent =
      `${r.accepted ? "ACCEPTED" : "REJECTED"}: ${r.rounds_passed}/${r.rounds} rounds passed ` +
      `(${r.challenges_one} challenges with b=1, params ${r.fingerprint}, ${ms} ms)`;
    const strip = $("s-rounds");
    strip.replaceChildren(...r.per_round.map((x) => {
      const cell = document.createElement("span");
      cell.textContent = x.b;
      cell.className = x.verdict ? "ok" : "bad";
      cell.title = `round ${x.round}: b=${x.b}, ${x.verdict ? "pass" : "fail"}`;
      return cell;
    }));
  });
}

function showBruteforce() {
  guarded($("b-out"), () => {
    const t0 = performance.now();
    const r = JSON.parse(bruteforce(num("b-p"), num("b-d"), num("b-seed")));
    const ms = (performance.now() - t0).toFixed(1);
    const lines = r.solutions.map((s) => `  [${s.join(", ")}]${JSON.stringify(s) === JSON.stringify(r.planted) ? "  <- planted" : ""}`);
    $("b-out").textContent =
      `m=${r.m} n=${r.n}, planted eigenvalues [${r.planted.join(", ")}]\n` +
      `tested ${r.candidates_tested} candidates in ${ms} ms, ${r.solutions.length} key(s) reproduce the public key:\n` +
      lines.join("\n");
  });
}

await init();
$("ks-run").addEventListener("click", showKeyspace);
$("s-run").addEventListener("click", showSession);
$("b-run").addEventListener("click", showBruteforce);
showKeyspace();
