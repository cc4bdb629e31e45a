//! Lowering of the controlled cyclic permutation to register-level
//! controlled SWAPs and Fredkin gates, with numeric equivalence checks
//! against the operator engine, a line-oriented text format, and the
//! two-party construction that replaces the single ancilla with a Bell pair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{partial_trace, reorder_subsystems, CMatrix};
use crate::protocol::swap_projection_apply;
use crate::qstate::{cyclic_shift_operator, DensityMatrix, Operator, StateVector};

/// One gate. Qubit indices are global (ancillas first, then registers in
/// order); register indices count registers only.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Swap two whole registers when the control qubit is set.
    ControlledRegisterSwap {
        control: usize,
        reg_a: usize,
        reg_b: usize,
    },
    /// Controlled qubit-qubit swap.
    Fredkin { control: usize, a: usize, b: usize },
    /// An arbitrary two-qubit unitary, stored row-major over |q_a q_b⟩.
    TwoQubitGeneric { a: usize, b: usize, unitary: CMatrix },
}

/// Ancilla block followed by `registers` registers of `qubits_per_register`
/// qubits, big-endian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    pub ancilla_qubits: usize,
    pub registers: usize,
    pub qubits_per_register: usize,
}

impl RegisterLayout {
    pub fn total_qubits(&self) -> usize {
        self.ancilla_qubits + self.registers * self.qubits_per_register
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    /// First global qubit index of register `r`.
    pub fn register_start(&self, r: usize) -> usize {
        self.ancilla_qubits + r * self.qubits_per_register
    }

    /// Published bound of k Fredkin gates per register qubit.
    pub fn fredkin_bound(&self) -> usize {
        self.registers * self.qubits_per_register
    }

    pub fn two_qubit_bound(&self) -> usize {
        5 * self.fredkin_bound()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub controlled_register_swaps: usize,
    pub fredkins: usize,
    pub two_qubit_generics: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(layout: RegisterLayout, gates: Vec<Gate>) -> Result<Self> {
        let circuit = Self { layout, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    fn validate(&self) -> Result<()> {
        let total = self.layout.total_qubits();
        for gate in &self.gates {
            match gate {
                Gate::ControlledRegisterSwap {
                    control,
                    reg_a,
                    reg_b,
                } => {
                    if *reg_a >= self.layout.registers || *reg_b >= self.layout.registers {
                        return Err(Error::InvalidParameter(format!(
                            "register index out of range in {gate:?}"
                        )));
                    }
                    if reg_a == reg_b || *control >= total {
                        return Err(Error::InvalidParameter(format!(
                            "bad operands in {gate:?}"
                        )));
                    }
                    let n = self.layout.qubits_per_register;
                    let (sa, sb) = (
                        self.layout.register_start(*reg_a),
                        self.layout.register_start(*reg_b),
                    );
                    if (sa..sa + n).contains(control) || (sb..sb + n).contains(control) {
                        return Err(Error::InvalidParameter(format!(
                            "control qubit sits inside a swapped register in {gate:?}"
                        )));
                    }
                }
                Gate::Fredkin { control, a, b } => {
                    if *control >= total || *a >= total || *b >= total {
                        return Err(Error::InvalidParameter(format!(
                            "qubit index out of range in {gate:?}"
                        )));
                    }
                    if control == a || control == b || a == b {
                        return Err(Error::InvalidParameter(format!(
                            "operands must be distinct in {gate:?}"
                        )));
                    }
                }
                Gate::TwoQubitGeneric { a, b, unitary } => {
                    if *a >= total || *b >= total || a == b {
                        return Err(Error::InvalidParameter(format!(
                            "bad operands in a generic two-qubit gate on ({a}, {b})"
                        )));
                    }
                    if unitary.dim() != 4 {
                        return Err(Error::InvalidParameter(
                            "generic two-qubit payload must be 4x4".into(),
                        ));
                    }
                    if !unitary.is_unitary(1e-12) {
                        return Err(Error::InvalidState(
                            "generic two-qubit payload is not unitary".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for gate in &self.gates {
            match gate {
                Gate::ControlledRegisterSwap { .. } => counts.controlled_register_swaps += 1,
                Gate::Fredkin { .. } => counts.fredkins += 1,
                Gate::TwoQubitGeneric { .. } => counts.two_qubit_generics += 1,
            }
        }
        counts
    }

    /// Two-qubit gate count: five per Fredkin (a register swap lowers to one
    /// Fredkin per qubit first), plus the generic gates as themselves.
    pub fn two_qubit_count(&self) -> usize {
        let c = self.counts();
        5 * (c.fredkins + c.controlled_register_swaps * self.layout.qubits_per_register)
            + c.two_qubit_generics
    }

    /// Serializes to the line-oriented text format.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("ANCILLA {}\n", self.layout.ancilla_qubits));
        out.push_str(&format!(
            "REGISTERS {} {}\n",
            self.layout.registers, self.layout.qubits_per_register
        ));
        for gate in &self.gates {
            match gate {
                Gate::ControlledRegisterSwap {
                    control,
                    reg_a,
                    reg_b,
                } => out.push_str(&format!("CSWAPR {control} {reg_a} {reg_b}\n")),
                Gate::Fredkin { control, a, b } => {
                    out.push_str(&format!("FREDKIN {control} {a} {b}\n"))
                }
                Gate::TwoQubitGeneric { a, b, unitary } => {
                    out.push_str(&format!("U2 {a} {b}"));
                    for r in 0..4 {
                        for c in 0..4 {
                            let v = unitary.at(r, c);
                            out.push_str(&format!(" {},{}", v.re, v.im));
                        }
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parses the text format; `parse(emit(c)) == c` bit-exactly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ancillas: Option<usize> = None;
        let mut registers: Option<(usize, usize)> = None;
        let mut gates = Vec::new();

        let parse_usize = |tok: &str, line: usize| -> Result<usize> {
            tok.parse().map_err(|_| Error::CircuitParse {
                line,
                msg: format!("expected an integer, got '{tok}'"),
            })
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "ANCILLA" => {
                    if tokens.len() != 2 {
                        return Err(Error::CircuitParse {
                            line: line_no,
                            msg: "ANCILLA takes one count".into(),
                        });
                    }
                    ancillas = Some(parse_usize(tokens[1], line_no)?);
                }
                "REGISTERS" => {
                    if tokens.len() != 3 {
                        return Err(Error::CircuitParse {
                            line: line_no,
                            msg: "REGISTERS takes k and n".into(),
                        });
                    }
                    registers = Some((
                        parse_usize(tokens[1], line_no)?,
                        parse_usize(tokens[2], line_no)?,
                    ));
                }
                "CSWAPR" => {
                    if tokens.len() != 4 {
                        return Err(Error::CircuitParse {
                            line: line_no,
                            msg: "CSWAPR takes control and two registers".into(),
                        });
                    }
                    gates.push(Gate::ControlledRegisterSwap {
                        control: parse_usize(tokens[1], line_no)?,
                        reg_a: parse_usize(tokens[2], line_no)?,
                        reg_b: parse_usize(tokens[3], line_no)?,
                    });
                }
                "FREDKIN" => {
                    if tokens.len() != 4 {
                        return Err(Error::CircuitParse {
                            line: line_no,
                            msg: "FREDKIN takes control and two qubits".into(),
                        });
                    }
                    gates.push(Gate::Fredkin {
                        control: parse_usize(tokens[1], line_no)?,
                        a: parse_usize(tokens[2], line_no)?,
                        b: parse_usize(tokens[3], line_no)?,
                    });
                }
                "U2" => {
                    if tokens.len() != 3 + 16 {
                        return Err(Error::CircuitParse {
                            line: line_no,
                            msg: "U2 takes two qubits and 16 complex entries".into(),
                        });
                    }
                    let mut data = Vec::with_capacity(16);
                    for tok in &tokens[3..] {
                        let (re, im) = tok.split_once(',').ok_or(Error::CircuitParse {
                            line: line_no,
                            msg: format!("expected re,im pair, got '{tok}'"),
                        })?;
                        let parse_f = |s: &str| -> Result<f64> {
                            s.parse().map_err(|_| Error::CircuitParse {
                                line: line_no,
                                msg: format!("bad float '{s}'"),
                            })
                        };
                        data.push(Complex64::new(parse_f(re)?, parse_f(im)?));
                    }
                    gates.push(Gate::TwoQubitGeneric {
                        a: parse_usize(tokens[1], line_no)?,
                        b: parse_usize(tokens[2], line_no)?,
                        unitary: CMatrix::from_row_major(4, data)?,
                    });
                }
                other => {
                    return Err(Error::CircuitParse {
                        line: line_no,
                        msg: format!("unknown directive '{other}'"),
                    })
                }
            }
        }

        let ancilla_qubits = ancillas.ok_or(Error::CircuitParse {
            line: 0,
            msg: "missing ANCILLA header".into(),
        })?;
        let (registers, qubits_per_register) = registers.ok_or(Error::CircuitParse {
            line: 0,
            msg: "missing REGISTERS header".into(),
        })?;
        Circuit::new(
            RegisterLayout {
                ancilla_qubits,
                registers,
                qubits_per_register,
            },
            gates,
        )
    }
}

/// The transposition chain realizing the ancilla-controlled cyclic shift
/// with k − 1 controlled register swaps: applied highest pair first, the
/// controlled branch moves register m to m + 1 (mod k), matching
/// [`cyclic_shift_operator`].
pub fn build_cswap_chain(k: usize, n: usize) -> Result<Circuit> {
    if k < 2 || n < 1 {
        return Err(Error::InvalidParameter(
            "chain construction needs k >= 2 and n >= 1".into(),
        ));
    }
    let layout = RegisterLayout {
        ancilla_qubits: 1,
        registers: k,
        qubits_per_register: n,
    };
    crate::matrix::check_dim_cap(layout.dim(), crate::matrix::DIM_CAP)?;
    let gates = (0..k - 1)
        .rev()
        .map(|r| Gate::ControlledRegisterSwap {
            control: 0,
            reg_a: r + 1,
            reg_b: r,
        })
        .collect();
    Circuit::new(layout, gates)
}

/// Expands every controlled register swap into one Fredkin per register
/// qubit. Other gates pass through unchanged.
pub fn lower_to_fredkin(circuit: &Circuit) -> Circuit {
    let layout = *circuit.layout();
    let n = layout.qubits_per_register;
    let mut gates = Vec::new();
    for gate in circuit.gates() {
        match gate {
            Gate::ControlledRegisterSwap {
                control,
                reg_a,
                reg_b,
            } => {
                let (sa, sb) = (layout.register_start(*reg_a), layout.register_start(*reg_b));
                for q in 0..n {
                    gates.push(Gate::Fredkin {
                        control: *control,
                        a: sa + q,
                        b: sb + q,
                    });
                }
            }
            other => gates.push(other.clone()),
        }
    }
    Circuit { layout, gates }
}

#[inline]
fn mask_of(qubit: usize, total: usize) -> usize {
    1 << (total - 1 - qubit)
}

fn apply_gate(gate: &Gate, amps: &mut [Complex64], total: usize, layout: &RegisterLayout) {
    match gate {
        Gate::Fredkin { control, a, b } => {
            let (mc, ma, mb) = (
                mask_of(*control, total),
                mask_of(*a, total),
                mask_of(*b, total),
            );
            for x in 0..amps.len() {
                if x & mc != 0 && x & ma != 0 && x & mb == 0 {
                    amps.swap(x, x ^ ma ^ mb);
                }
            }
        }
        Gate::ControlledRegisterSwap {
            control,
            reg_a,
            reg_b,
        } => {
            let mc = mask_of(*control, total);
            let n = layout.qubits_per_register;
            let (sa, sb) = (layout.register_start(*reg_a), layout.register_start(*reg_b));
            for x in 0..amps.len() {
                if x & mc == 0 {
                    continue;
                }
                let mut y = x;
                for q in 0..n {
                    let (ma, mb) = (mask_of(sa + q, total), mask_of(sb + q, total));
                    let (ba, bb) = (x & ma != 0, x & mb != 0);
                    if ba != bb {
                        y ^= ma | mb;
                    }
                }
                if y > x {
                    amps.swap(x, y);
                }
            }
        }
        Gate::TwoQubitGeneric { a, b, unitary } => {
            let (ma, mb) = (mask_of(*a, total), mask_of(*b, total));
            for x in 0..amps.len() {
                if x & (ma | mb) != 0 {
                    continue;
                }
                let idx = [x, x | mb, x | ma, x | ma | mb];
                let old = idx.map(|i| amps[i]);
                for (r, &i) in idx.iter().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for (c, &v) in old.iter().enumerate() {
                        acc += unitary.at(r, c) * v;
                    }
                    amps[i] = acc;
                }
            }
        }
    }
}

/// Applies the circuit's gates in sequence to an input state.
pub fn simulate_circuit(circuit: &Circuit, input: &StateVector) -> Result<StateVector> {
    let total = circuit.layout().total_qubits();
    if input.dim() != circuit.layout().dim() {
        return Err(Error::DimensionMismatch {
            expected: circuit.layout().dim(),
            got: input.dim(),
        });
    }
    let mut amps = input.amplitudes().to_vec();
    for gate in circuit.gates() {
        apply_gate(gate, &mut amps, total, circuit.layout());
    }
    StateVector::new(amps)
}

/// The circuit's full unitary, assembled column by column.
pub fn circuit_unitary(circuit: &Circuit) -> Result<Operator> {
    let dim = circuit.layout().dim();
    crate::matrix::check_dim_cap(dim, crate::matrix::DIM_CAP)?;
    let total = circuit.layout().total_qubits();
    let mut mat = CMatrix::zeros(dim);
    let mut amps = vec![Complex64::ZERO; dim];
    for col in 0..dim {
        amps.fill(Complex64::ZERO);
        amps[col] = Complex64::ONE;
        for gate in circuit.gates() {
            apply_gate(gate, &mut amps, total, circuit.layout());
        }
        for (row, &v) in amps.iter().enumerate() {
            if v != Complex64::ZERO {
                mat.set(row, col, v);
            }
        }
    }
    Operator::new(mat, false)
}

/// Reference unitary |0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ S for the chain to match.
pub fn controlled_cycle_reference(k: usize, n: usize) -> Result<Operator> {
    let d = 1usize << n;
    let shift = cyclic_shift_operator(k, d)?;
    let sys_dim = shift.dim();
    crate::matrix::check_dim_cap(2 * sys_dim, crate::matrix::DIM_CAP)?;
    let mut mat = CMatrix::zeros(2 * sys_dim);
    for i in 0..sys_dim {
        mat.set(i, i, Complex64::ONE);
    }
    for r in 0..sys_dim {
        for c in 0..sys_dim {
            let v = shift.matrix().at(r, c);
            if v != Complex64::ZERO {
                mat.set(sys_dim + r, sys_dim + c, v);
            }
        }
    }
    Operator::new(mat, false)
}

fn plus_projector() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::outer(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)])
}

/// Runs the ancilla realization of the projection through the compiled
/// circuit: prepare |+⟩, apply the chain, project the ancilla back on |+⟩,
/// and trace it out. Returns the unnormalized output and its weight, in the
/// same convention as [`swap_projection_apply`].
pub fn swap_projection_via_circuit(
    circuit: &Circuit,
    rho: &DensityMatrix,
) -> Result<(CMatrix, f64)> {
    let layout = circuit.layout();
    if layout.ancilla_qubits != 1 {
        return Err(Error::InvalidParameter(
            "ancilla realization needs exactly one ancilla qubit".into(),
        ));
    }
    let sys_dim = 1usize << (layout.registers * layout.qubits_per_register);
    if rho.dim() != sys_dim {
        return Err(Error::DimensionMismatch {
            expected: sys_dim,
            got: rho.dim(),
        });
    }
    let plus = plus_projector();
    let full = plus.kron(rho.matrix())?;
    let unitary = circuit_unitary(circuit)?;
    let evolved = unitary.matrix().mul(&full).mul(&unitary.matrix().adjoint());
    let effect = plus.kron(&CMatrix::identity(sys_dim))?;
    let selected = effect.mul(&evolved).mul(&effect);
    let out = partial_trace(&selected, &[2, sys_dim], &[1])?;
    let weight = out.trace().re;
    Ok((out, weight))
}

/// Checks a user-supplied five-gate decomposition against the Fredkin
/// unitary (control = qubit 0, targets 1 and 2) within 1e-10.
pub fn validate_fredkin_decomposition(gates: &[Gate]) -> Result<()> {
    if gates.len() != 5 {
        return Err(Error::InvalidParameter(format!(
            "expected a five-gate decomposition, got {} gates",
            gates.len()
        )));
    }
    let layout = RegisterLayout {
        ancilla_qubits: 3,
        registers: 0,
        qubits_per_register: 1,
    };
    for gate in gates {
        match gate {
            Gate::TwoQubitGeneric { a, b, .. } if *a < 3 && *b < 3 => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "decomposition must consist of two-qubit gates on qubits 0..3".into(),
                ))
            }
        }
    }
    let circuit = Circuit::new(layout, gates.to_vec())?;
    let composed = circuit_unitary(&circuit)?;
    let reference = fredkin_unitary();
    let dev = composed.matrix().max_abs_diff(&reference);
    if dev > 1e-10 {
        return Err(Error::InvalidState(format!(
            "decomposition deviates from the Fredkin unitary by {dev}"
        )));
    }
    Ok(())
}

/// The 8x8 Fredkin unitary with control on qubit 0.
pub fn fredkin_unitary() -> CMatrix {
    let mut m = CMatrix::identity(8);
    m.set(5, 5, Complex64::ZERO);
    m.set(6, 6, Complex64::ZERO);
    m.set(5, 6, Complex64::ONE);
    m.set(6, 5, Complex64::ONE);
    m
}

/// Two-party construction for two copies of a bipartite state: each party
/// controls a local register swap off one half of an entangled ancilla pair,
/// and the ancilla measurement becomes the even-parity projection.
/// `half_qubits` counts the qubits each party holds per copy.
pub fn distributed_construct(half_qubits: usize) -> Result<Circuit> {
    if half_qubits < 1 {
        return Err(Error::InvalidParameter(
            "each party needs at least one qubit per copy".into(),
        ));
    }
    let layout = RegisterLayout {
        ancilla_qubits: 2,
        registers: 4, // A1, A2, B1, B2
        qubits_per_register: half_qubits,
    };
    crate::matrix::check_dim_cap(layout.dim(), crate::matrix::DIM_CAP)?;
    let gates = vec![
        Gate::ControlledRegisterSwap {
            control: 0,
            reg_a: 0,
            reg_b: 1,
        },
        Gate::ControlledRegisterSwap {
            control: 1,
            reg_a: 2,
            reg_b: 3,
        },
    ];
    Circuit::new(layout, gates)
}

/// Even-parity projector |++⟩⟨++| + |−−⟩⟨−−| on the two ancilla qubits.
pub fn parity_projector() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
    let minus = [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
    let pp: Vec<Complex64> = plus
        .iter()
        .flat_map(|a| plus.iter().map(move |b| a * b))
        .collect();
    let mm: Vec<Complex64> = minus
        .iter()
        .flat_map(|a| minus.iter().map(move |b| a * b))
        .collect();
    CMatrix::outer(&pp).add(&CMatrix::outer(&mm))
}

/// Runs a two-copy bipartite input (copy-major subsystem order A1 B1 A2 B2)
/// through the distributed construction and compares the result entrywise
/// against the single-ancilla projection. Returns the maximum deviation.
pub fn verify_distributed_identity(rho: &DensityMatrix) -> Result<f64> {
    let qubits = rho.num_qubits();
    if qubits % 4 != 0 {
        return Err(Error::InvalidParameter(format!(
            "two-copy bipartite input needs 4m qubits, got {qubits}"
        )));
    }
    let half_qubits = qubits / 4;
    let half_dim = 1usize << half_qubits;
    let copy_dim = half_dim * half_dim;

    // reference: the monolithic projection on copies (A1 B1), (A2 B2)
    let (reference, _) = swap_projection_apply(rho, 2, copy_dim)?;

    // distributed path works party-major: A1 A2 B1 B2
    let dims = [half_dim, half_dim, half_dim, half_dim];
    let party_major = reorder_subsystems(rho.matrix(), &dims, &[0, 2, 1, 3])?;

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell_pair = [
        Complex64::new(s, 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(s, 0.0),
    ];
    let ancilla = CMatrix::outer(&bell_pair);
    let full = ancilla.kron(&party_major)?;

    let circuit = distributed_construct(half_qubits)?;
    let unitary = circuit_unitary(&circuit)?;
    let evolved = unitary.matrix().mul(&full).mul(&unitary.matrix().adjoint());

    let sys_dim = copy_dim * copy_dim;
    let effect = parity_projector().kron(&CMatrix::identity(sys_dim))?;
    let selected = effect.mul(&evolved).mul(&effect);
    let reduced = partial_trace(&selected, &[4, sys_dim], &[1])?;

    // back to copy-major before comparing
    let copy_major = reorder_subsystems(&reduced, &dims, &[0, 2, 1, 3])?;
    Ok(copy_major.max_abs_diff(&reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::hermitian_eigen;
    use crate::noise::white;
    use crate::states::bell;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_base_case_is_one_fredkin() {
        let chain = build_cswap_chain(2, 1).unwrap();
        assert_eq!(chain.counts().controlled_register_swaps, 1);
        let lowered = lower_to_fredkin(&chain);
        assert_eq!(lowered.counts().fredkins, 1);
        assert_eq!(
            lowered.gates()[0],
            Gate::Fredkin {
                control: 0,
                a: 2,
                b: 1
            }
        );
        // on one-qubit registers the whole chain is the Fredkin unitary up
        // to target ordering
        let u = circuit_unitary(&lowered).unwrap();
        let reference = controlled_cycle_reference(2, 1).unwrap();
        assert!(u.matrix().max_abs_diff(reference.matrix()) < 1e-14);
    }

    #[test]
    fn chain_matches_controlled_cycle() {
        for (k, n) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2), (4, 1)] {
            let chain = build_cswap_chain(k, n).unwrap();
            let u = circuit_unitary(&chain).unwrap();
            let reference = controlled_cycle_reference(k, n).unwrap();
            assert!(
                u.matrix().max_abs_diff(reference.matrix()) < 1e-12,
                "k={k} n={n}"
            );
        }
    }

    #[test]
    fn compiled_unitary_is_a_permutation_matrix() {
        let chain = build_cswap_chain(3, 2).unwrap();
        let u = circuit_unitary(&chain).unwrap();
        for r in 0..u.dim() {
            for c in 0..u.dim() {
                let v = u.matrix().at(r, c);
                assert!(v.im.abs() < 1e-12);
                assert!(
                    v.re.abs() < 1e-12 || (v.re - 1.0).abs() < 1e-12,
                    "entry ({r},{c}) = {v}"
                );
            }
        }
    }

    #[test]
    fn control_zero_branch_is_identity() {
        let chain = build_cswap_chain(3, 1).unwrap();
        // |0⟩ ⊗ |011⟩: ancilla clear, registers must stay put
        let input = StateVector::basis(4, 0b0011).unwrap();
        let output = simulate_circuit(&chain, &input).unwrap();
        assert_eq!(output, input);
    }

    #[test]
    fn control_one_branch_cycles_registers() {
        let chain = build_cswap_chain(3, 1).unwrap();
        // |1⟩ ⊗ |a b c⟩ -> |1⟩ ⊗ |c a b⟩ (copy m moves to m+1)
        let input = StateVector::basis(4, 0b1_011).unwrap();
        let output = simulate_circuit(&chain, &input).unwrap();
        let expected = StateVector::basis(4, 0b1_101).unwrap();
        assert_eq!(output, expected);
    }

    #[test]
    fn lowering_preserves_the_unitary() {
        let chain = build_cswap_chain(3, 2).unwrap();
        let lowered = lower_to_fredkin(&chain);
        assert_eq!(lowered.counts().fredkins, 4);
        let a = circuit_unitary(&chain).unwrap();
        let b = circuit_unitary(&lowered).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn gate_counts_and_bounds() {
        let chain = build_cswap_chain(3, 2).unwrap();
        let lowered = lower_to_fredkin(&chain);
        // n(k-1) Fredkins against the published nk bound
        assert_eq!(lowered.counts().fredkins, 4);
        assert_eq!(lowered.layout().fredkin_bound(), 6);
        assert_eq!(lowered.two_qubit_count(), 20);
        assert_eq!(lowered.layout().two_qubit_bound(), 30);
        // counting is stable across the two representations
        assert_eq!(chain.two_qubit_count(), 20);

        let empty = Circuit::new(
            RegisterLayout {
                ancilla_qubits: 1,
                registers: 2,
                qubits_per_register: 1,
            },
            vec![],
        )
        .unwrap();
        assert_eq!(empty.two_qubit_count(), 0);
    }

    #[test]
    fn fredkin_swaps_targets_under_set_control() {
        let layout = RegisterLayout {
            ancilla_qubits: 3,
            registers: 0,
            qubits_per_register: 1,
        };
        let circuit = Circuit::new(
            layout,
            vec![Gate::Fredkin {
                control: 0,
                a: 1,
                b: 2,
            }],
        )
        .unwrap();
        let u = circuit_unitary(&circuit).unwrap();
        assert!(u.matrix().max_abs_diff(&fredkin_unitary()) < 1e-15);
    }

    #[test]
    fn circuit_projection_matches_operator_projection() {
        let sigma = white(&bell(), 0.1).unwrap();
        let ensemble = sigma.tensor_power(2).unwrap();
        let chain = build_cswap_chain(2, 2).unwrap();
        let (via_circuit, w_circuit) = swap_projection_via_circuit(&chain, &ensemble).unwrap();
        let (direct, w_direct) = swap_projection_apply(&ensemble, 2, 4).unwrap();
        assert!(via_circuit.max_abs_diff(&direct) < 1e-12);
        assert_abs_diff_eq!(w_circuit, w_direct, epsilon = 1e-12);
    }

    #[test]
    fn distributed_identity_on_product_inputs() {
        // pure target: both paths leave it untouched
        let pure = bell().tensor_power(2).unwrap().density_matrix();
        assert!(verify_distributed_identity(&pure).unwrap() < 1e-12);

        // noisy product input
        let sigma = white(&bell(), 0.1).unwrap();
        let ensemble = sigma.tensor_power(2).unwrap();
        assert!(verify_distributed_identity(&ensemble).unwrap() < 1e-12);
    }

    #[test]
    fn distributed_identity_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        // random rank-3 two-copy state on 4 qubits
        let mut mat = CMatrix::zeros(16);
        for _ in 0..3 {
            let amps: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps: Vec<Complex64> = amps.iter().map(|a| a / norm).collect();
            mat = mat.add(&CMatrix::outer(&amps).scale_re(1.0 / 3.0));
        }
        let rho = DensityMatrix::new(mat).unwrap();
        assert!(verify_distributed_identity(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn parity_projector_matches_bell_basis_expansion() {
        // |++⟩⟨++| + |−−⟩⟨−−| equals the projector onto the two even-parity
        // maximally entangled pair states
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [
            Complex64::new(s, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(s, 0.0),
        ];
        let psi = [
            Complex64::ZERO,
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::ZERO,
        ];
        let expected = CMatrix::outer(&phi).add(&CMatrix::outer(&psi));
        assert!(parity_projector().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn emit_parse_round_trip() {
        let chain = lower_to_fredkin(&build_cswap_chain(3, 2).unwrap());
        let text = chain.emit();
        let parsed = Circuit::parse(&text).unwrap();
        assert_eq!(parsed, chain);
        assert_eq!(parsed.emit(), text);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Circuit::parse("FOO 1 2 3").is_err());
        assert!(Circuit::parse("ANCILLA 1\nREGISTERS 2 1\nFREDKIN 0 1").is_err());
        assert!(Circuit::parse("REGISTERS 2 1\nFREDKIN 0 1 2").is_err());
        // out-of-range operand
        assert!(Circuit::parse("ANCILLA 1\nREGISTERS 2 1\nFREDKIN 0 1 9").is_err());
    }

    #[test]
    fn fredkin_decomposition_validator() {
        // wrong gate count
        assert!(validate_fredkin_decomposition(&[]).is_err());
        // five identity gates do not compose to a Fredkin
        let id = Gate::TwoQubitGeneric {
            a: 1,
            b: 2,
            unitary: CMatrix::identity(4),
        };
        let err = validate_fredkin_decomposition(&vec![id; 5]).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
        // non two-qubit gates are rejected outright
        let fredkin = Gate::Fredkin {
            control: 0,
            a: 1,
            b: 2,
        };
        assert!(validate_fredkin_decomposition(&vec![
            fredkin,
            id_gate(),
            id_gate(),
            id_gate(),
            id_gate()
        ])
        .is_err());
    }

    fn id_gate() -> Gate {
        Gate::TwoQubitGeneric {
            a: 1,
            b: 2,
            unitary: CMatrix::identity(4),
        }
    }

    fn random_unitary_4(rng: &mut impl Rng) -> CMatrix {
        // eigenvectors of a random Hermitian matrix form a unitary
        let m = CMatrix::from_fn(4, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = m.add(&m.adjoint()).scale_re(0.5);
        let (_, vecs) = hermitian_eigen(&h);
        vecs
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_circuits_round_trip(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layout = RegisterLayout {
                ancilla_qubits: 1,
                registers: 3,
                qubits_per_register: 2,
            };
            let total = layout.total_qubits();
            let mut gates = Vec::new();
            for _ in 0..rng.random_range(0..8) {
                match rng.random_range(0..3) {
                    0 => {
                        let a = rng.random_range(0..layout.registers);
                        let mut b = rng.random_range(0..layout.registers);
                        while b == a {
                            b = rng.random_range(0..layout.registers);
                        }
                        gates.push(Gate::ControlledRegisterSwap { control: 0, reg_a: a, reg_b: b });
                    }
                    1 => {
                        let mut picks = rand::seq::index::sample(&mut rng, total, 3).into_vec();
                        picks.sort_unstable();
                        gates.push(Gate::Fredkin { control: picks[0], a: picks[1], b: picks[2] });
                    }
                    _ => {
                        let picks = rand::seq::index::sample(&mut rng, total, 2).into_vec();
                        gates.push(Gate::TwoQubitGeneric {
                            a: picks[0],
                            b: picks[1],
                            unitary: random_unitary_4(&mut rng),
                        });
                    }
                }
            }
            let circuit = Circuit::new(layout, gates).unwrap();
            let parsed = Circuit::parse(&circuit.emit()).unwrap();
            prop_assert_eq!(parsed, circuit);
        }
    }
}
