use std::fmt::Write as _;

use super::{is_identifier, Gate, GateKind, Netlist, NetlistError, SourceLines};

/// Parses BENCH text. A leading `# <identifier>` comment names the circuit,
/// otherwise it is called `top`.
pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    let mut name: Option<String> = None;
    let mut seen_statement = false;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut gates = Vec::new();
    let mut lines = SourceLines { inputs: Vec::new(), outputs: Vec::new(), gates: Vec::new() };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let (code, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], Some(raw[p + 1..].trim())),
            None => (raw, None),
        };
        let code = code.trim();
        if code.is_empty() {
            if let Some(c) = comment {
                if name.is_none() && !seen_statement && is_identifier(c) {
                    name = Some(c.to_string());
                }
            }
            continue;
        }
        seen_statement = true;
        let syntax = |message: &str| NetlistError::SyntaxError { line: line_no, message: message.to_string() };

        if let Some((lhs, rhs)) = code.split_once('=') {
            let output = lhs.trim();
            if !is_identifier(output) {
                return Err(syntax(&format!("bad net name `{output}`")));
            }
            let (kind, args) = call(rhs.trim()).ok_or_else(|| syntax("expected `KIND(args)`"))?;
            let kind: GateKind = kind
                .parse()
                .map_err(|_| syntax(&format!("unknown gate kind `{kind}`")))?;
            let args = split_args(args).ok_or_else(|| syntax("malformed argument list"))?;
            gates.push(Gate { output: output.to_string(), kind, inputs: args });
            lines.gates.push(line_no);
        } else {
            let (keyword, args) = call(code).ok_or_else(|| syntax("expected INPUT(..), OUTPUT(..) or an assignment"))?;
            let args = split_args(args).ok_or_else(|| syntax("malformed argument list"))?;
            if args.len() != 1 {
                return Err(syntax("expected exactly one net"));
            }
            let net = args.into_iter().next().unwrap();
            match keyword.to_ascii_uppercase().as_str() {
                "INPUT" => {
                    inputs.push(net);
                    lines.inputs.push(line_no);
                }
                "OUTPUT" => {
                    outputs.push(net);
                    lines.outputs.push(line_no);
                }
                other => return Err(syntax(&format!("unknown declaration `{other}`"))),
            }
        }
    }

    Netlist::validated(name.unwrap_or_else(|| "top".to_string()), inputs, outputs, gates, Some(&lines))
}

/// Splits `KIND(args)` into its keyword and the text between the parentheses.
fn call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].trim_end().strip_suffix(')')?;
    let keyword = s[..open].trim();
    if keyword.is_empty() || !keyword.bytes().all(|b| b.is_ascii_alphabetic()) {
        return None;
    }
    Some((keyword, inner))
}

fn split_args(s: &str) -> Option<Vec<String>> {
    let args: Vec<String> = s.split(',').map(|a| a.trim().to_string()).collect();
    if args.iter().all(|a| is_identifier(a)) {
        Some(args)
    } else {
        None
    }
}

/// Emits canonical BENCH text: a header comment, then `INPUT`, `OUTPUT`
/// and gate lines, gates in (stable) topological order. LF line endings.
pub fn write_bench(netlist: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", netlist.name());
    let _ = writeln!(
        out,
        "# {} inputs, {} outputs, {} gates",
        netlist.inputs().len(),
        netlist.outputs().len(),
        netlist.gates().len()
    );
    for i in netlist.inputs() {
        let _ = writeln!(out, "INPUT({i})");
    }
    for o in netlist.outputs() {
        let _ = writeln!(out, "OUTPUT({o})");
    }
    let order = netlist.topological_order().expect("validated netlist is acyclic");
    for i in order {
        let g = &netlist.gates()[i];
        let _ = writeln!(out, "{} = {}({})", g.output, g.kind, g.inputs.join(", "));
    }
    out
}
