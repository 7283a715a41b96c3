//! Random program synthesis.
//!
//! Programs are drafted in two passes: first every class gets its shape
//! (hierarchy, fields, method signatures, an archetype per method), then
//! bodies are materialized against the full signature plan so that calls and
//! field accesses always bind. Member names are unique across the whole
//! program (f0, f1, ... / m0, m1, ...), which keeps later reference rewrites
//! free of capture concerns. A draft is kept only if it resolves and its
//! canonical rendering lands inside the accepted line-count window.

use rand::Rng;

use crate::syntax::{
    self, resolve, AssignTarget, ClassDecl, CompilationUnit, Expr, FieldDecl, MethodDecl, Param,
    ReturnType, Span, Stmt, TypeRef, Visibility,
};

use super::{GenerateError, GeneratorConfig, MAX_DRAFTS};

const PACKAGE_POOL: [&str; 6] = ["app", "core", "util", "model", "store", "web"];
const CLASS_POOL: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
const PARAM_POOL: [&str; 4] = ["x", "y", "z", "w"];

pub fn generate_program(
    config: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<Vec<CompilationUnit>, GenerateError> {
    config.validate()?;
    let (lo, hi) = config.accepted_loc();
    for _ in 0..MAX_DRAFTS {
        let unit = draft(config, rng);
        let loc = syntax::print(&unit).lines().count();
        if loc < lo || loc > hi {
            continue;
        }
        let units = vec![unit];
        if resolve(&units).is_ok() {
            return Ok(units);
        }
    }
    Err(GenerateError::GenerationExhausted(MAX_DRAFTS))
}

#[derive(Clone)]
struct ClassPlan {
    name: String,
    superclass: Option<usize>,
    is_abstract: bool,
    fields: Vec<FieldPlan>,
    methods: Vec<MethodPlan>,
}

#[derive(Clone)]
struct FieldPlan {
    name: String,
    ty: TypeRef,
    visibility: Visibility,
    init: Option<Expr>,
}

#[derive(Clone)]
struct MethodPlan {
    name: String,
    visibility: Visibility,
    is_abstract: bool,
    ret: ReturnType,
    params: Vec<Param>,
    archetype: Archetype,
}

#[derive(Clone, Copy, PartialEq)]
enum Archetype {
    /// Computes from parameters and literals only; never touches `this`.
    Helper,
    /// Reads or writes a field of the own class chain.
    FieldUser,
    /// Calls a method of another class through a dedicated receiver param.
    Caller { target: usize },
    /// Concrete implementation of an inherited abstract method.
    Override,
}

fn draft(config: &GeneratorConfig, rng: &mut impl Rng) -> CompilationUnit {
    let package = PACKAGE_POOL[rng.gen_range(0..PACKAGE_POOL.len())].to_string();
    let class_count = rng.gen_range(config.classes_min..=config.classes_max).min(CLASS_POOL.len());
    let mut field_counter = 0usize;
    let mut method_counter = 0usize;

    let mut plans: Vec<ClassPlan> = (0..class_count)
        .map(|i| ClassPlan {
            name: CLASS_POOL[i].to_string(),
            superclass: if i > 0 && rng.gen_bool(config.inheritance_probability) {
                Some(rng.gen_range(0..i))
            } else {
                None
            },
            is_abstract: false,
            fields: Vec::new(),
            methods: Vec::new(),
        })
        .collect();

    // A class with children may be abstract; leaves stay concrete so the
    // program never strands an uninstantiable leaf.
    for i in 0..plans.len() {
        let has_child = plans.iter().any(|p| p.superclass == Some(i));
        if has_child && rng.gen_bool(0.35) {
            plans[i].is_abstract = true;
        }
    }

    for i in 0..plans.len() {
        let field_count = rng.gen_range(0..=config.fields_per_class_max);
        for _ in 0..field_count {
            let ty = draw_field_type(rng, plans.len());
            let init = match &ty {
                TypeRef::Int if rng.gen_bool(0.5) => Some(Expr::IntLit(rng.gen_range(0..10))),
                TypeRef::Boolean if rng.gen_bool(0.5) => Some(Expr::BoolLit(rng.gen_bool(0.5))),
                _ => None,
            };
            plans[i].fields.push(FieldPlan {
                name: format!("f{field_counter}"),
                ty,
                visibility: draw_field_visibility(rng),
                init,
            });
            field_counter += 1;
        }
        let method_count = rng.gen_range(0..=config.methods_per_class_max);
        for _ in 0..method_count {
            let archetype = draw_archetype(rng, i, plans.len());
            let mut params = draw_params(rng);
            if let Archetype::Caller { target } = archetype {
                let receiver_name = format!("v{}", params.len());
                params.push(Param {
                    name: receiver_name,
                    type_name: TypeRef::Named(CLASS_POOL[target].to_string()),
                });
            }
            plans[i].methods.push(MethodPlan {
                name: format!("m{method_counter}"),
                visibility: draw_method_visibility(rng),
                is_abstract: false,
                ret: draw_return_type(rng),
                params,
                archetype,
            });
            method_counter += 1;
        }
    }

    // Abstract classes may declare one abstract method; every direct child
    // then receives a concrete implementation with the same signature.
    for i in 0..plans.len() {
        if !plans[i].is_abstract || !rng.gen_bool(0.5) {
            continue;
        }
        let name = format!("m{method_counter}");
        method_counter += 1;
        let params = if rng.gen_bool(0.5) {
            vec![Param { name: "x".to_string(), type_name: TypeRef::Int }]
        } else {
            Vec::new()
        };
        let visibility =
            if rng.gen_bool(0.5) { Visibility::Public } else { Visibility::Protected };
        plans[i].methods.push(MethodPlan {
            name: name.clone(),
            visibility,
            is_abstract: true,
            ret: ReturnType::Type(TypeRef::Int),
            params: params.clone(),
            archetype: Archetype::Helper,
        });
        for j in 0..plans.len() {
            if plans[j].superclass == Some(i) {
                plans[j].methods.push(MethodPlan {
                    name: name.clone(),
                    visibility,
                    is_abstract: false,
                    ret: ReturnType::Type(TypeRef::Int),
                    params: params.clone(),
                    archetype: Archetype::Override,
                });
            }
        }
    }

    materialize(&package, &plans, rng)
}

fn draw_field_type(rng: &mut impl Rng, class_count: usize) -> TypeRef {
    let roll = rng.gen_range(0..100);
    if roll < 70 {
        TypeRef::Int
    } else if roll < 85 {
        TypeRef::Boolean
    } else {
        TypeRef::Named(CLASS_POOL[rng.gen_range(0..class_count)].to_string())
    }
}

fn draw_field_visibility(rng: &mut impl Rng) -> Visibility {
    match rng.gen_range(0..100) {
        0..=29 => Visibility::Private,
        30..=54 => Visibility::Public,
        55..=74 => Visibility::Protected,
        _ => Visibility::Package,
    }
}

fn draw_method_visibility(rng: &mut impl Rng) -> Visibility {
    match rng.gen_range(0..100) {
        0..=39 => Visibility::Public,
        40..=64 => Visibility::Package,
        65..=84 => Visibility::Protected,
        _ => Visibility::Private,
    }
}

fn draw_return_type(rng: &mut impl Rng) -> ReturnType {
    match rng.gen_range(0..100) {
        0..=59 => ReturnType::Type(TypeRef::Int),
        60..=84 => ReturnType::Void,
        _ => ReturnType::Type(TypeRef::Boolean),
    }
}

fn draw_archetype(rng: &mut impl Rng, class_index: usize, class_count: usize) -> Archetype {
    let roll = rng.gen_range(0..100);
    if roll < 25 && class_count > 1 {
        let mut target = rng.gen_range(0..class_count - 1);
        if target >= class_index {
            target += 1;
        }
        Archetype::Caller { target }
    } else if roll < 50 {
        Archetype::Helper
    } else {
        Archetype::FieldUser
    }
}

fn draw_params(rng: &mut impl Rng) -> Vec<Param> {
    let count = rng.gen_range(0..=2);
    (0..count)
        .map(|i| Param {
            name: PARAM_POOL[i].to_string(),
            type_name: if rng.gen_bool(0.75) { TypeRef::Int } else { TypeRef::Boolean },
        })
        .collect()
}

fn materialize(package: &str, plans: &[ClassPlan], rng: &mut impl Rng) -> CompilationUnit {
    let classes = plans
        .iter()
        .enumerate()
        .map(|(i, plan)| ClassDecl {
            name: plan.name.clone(),
            superclass: plan.superclass.map(|s| plans[s].name.clone()),
            interfaces: Vec::new(),
            is_abstract: plan.is_abstract,
            fields: plan
                .fields
                .iter()
                .map(|f| FieldDecl {
                    name: f.name.clone(),
                    type_name: f.ty.clone(),
                    visibility: f.visibility,
                    initializer: f.init.clone(),
                    span: Span::default(),
                })
                .collect(),
            methods: plan
                .methods
                .iter()
                .map(|m| MethodDecl {
                    name: m.name.clone(),
                    visibility: m.visibility,
                    is_abstract: m.is_abstract,
                    return_type: m.ret.clone(),
                    params: m.params.clone(),
                    body: if m.is_abstract { None } else { Some(build_body(plans, i, m, rng)) },
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
        .collect();
    CompilationUnit { package_name: package.to_string(), classes }
}

/// Int fields reachable from a method of class `i`: its own (any visibility)
/// plus non-private inherited ones.
fn reachable_int_fields(plans: &[ClassPlan], i: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = Some(i);
    let mut own = true;
    while let Some(c) = cur {
        for f in &plans[c].fields {
            if f.ty == TypeRef::Int && (own || f.visibility != Visibility::Private) {
                out.push(f.name.clone());
            }
        }
        cur = plans[c].superclass;
        own = false;
    }
    out
}

fn int_params(m: &MethodPlan) -> Vec<String> {
    m.params
        .iter()
        .filter(|p| p.type_name == TypeRef::Int)
        .map(|p| p.name.clone())
        .collect()
}

fn build_body(plans: &[ClassPlan], class: usize, m: &MethodPlan, rng: &mut impl Rng) -> Vec<Stmt> {
    match m.archetype {
        Archetype::Helper => helper_body(m, rng),
        Archetype::FieldUser | Archetype::Override => {
            let fields = reachable_int_fields(plans, class);
            if fields.is_empty() {
                helper_body(m, rng)
            } else {
                let field = fields[rng.gen_range(0..fields.len())].clone();
                field_user_body(m, &field, rng)
            }
        }
        Archetype::Caller { target } => match pick_call_target(plans, target) {
            Some(target_method) => caller_body(m, plans, target, target_method, rng),
            None => helper_body(m, rng),
        },
    }
}

fn helper_body(m: &MethodPlan, rng: &mut impl Rng) -> Vec<Stmt> {
    let ints = int_params(m);
    match &m.ret {
        ReturnType::Void => {
            let seed_expr = match ints.first() {
                Some(p) => Expr::Binary {
                    op: syntax::BinOp::Mul,
                    left: Box::new(Expr::NameRef(p.clone())),
                    right: Box::new(Expr::IntLit(2)),
                },
                None => Expr::IntLit(rng.gen_range(1..10)),
            };
            vec![
                Stmt::LocalDecl { name: "tmp".to_string(), type_name: TypeRef::Int, init: seed_expr },
                Stmt::Assign {
                    target: AssignTarget::Name("tmp".to_string()),
                    value: Expr::Binary {
                        op: syntax::BinOp::Add,
                        left: Box::new(Expr::NameRef("tmp".to_string())),
                        right: Box::new(Expr::IntLit(1)),
                    },
                },
            ]
        }
        ReturnType::Type(TypeRef::Boolean) => {
            let expr = match ints.first() {
                Some(p) => Expr::Binary {
                    op: syntax::BinOp::Gt,
                    left: Box::new(Expr::NameRef(p.clone())),
                    right: Box::new(Expr::IntLit(rng.gen_range(0..10))),
                },
                None => Expr::BoolLit(rng.gen_bool(0.5)),
            };
            vec![Stmt::Return(expr)]
        }
        _ => {
            let expr = match ints.len() {
                0 => Expr::IntLit(rng.gen_range(0..100)),
                1 => Expr::Binary {
                    op: syntax::BinOp::Add,
                    left: Box::new(Expr::NameRef(ints[0].clone())),
                    right: Box::new(Expr::IntLit(rng.gen_range(1..10))),
                },
                _ => Expr::Binary {
                    op: syntax::BinOp::Add,
                    left: Box::new(Expr::NameRef(ints[0].clone())),
                    right: Box::new(Expr::Binary {
                        op: syntax::BinOp::Mul,
                        left: Box::new(Expr::NameRef(ints[1].clone())),
                        right: Box::new(Expr::IntLit(2)),
                    }),
                },
            };
            vec![Stmt::Return(expr)]
        }
    }
}

fn field_ref(field: &str, rng: &mut impl Rng) -> Expr {
    if rng.gen_bool(0.5) {
        Expr::FieldAccess { receiver: Box::new(Expr::This), name: field.to_string() }
    } else {
        Expr::NameRef(field.to_string())
    }
}

fn field_user_body(m: &MethodPlan, field: &str, rng: &mut impl Rng) -> Vec<Stmt> {
    let ints = int_params(m);
    match &m.ret {
        ReturnType::Void => {
            let value = match ints.first() {
                Some(p) => Expr::NameRef(p.clone()),
                None => Expr::Binary {
                    op: syntax::BinOp::Add,
                    left: Box::new(field_ref(field, rng)),
                    right: Box::new(Expr::IntLit(1)),
                },
            };
            vec![Stmt::Assign {
                target: AssignTarget::Field { receiver: Expr::This, name: field.to_string() },
                value,
            }]
        }
        ReturnType::Type(TypeRef::Boolean) => {
            vec![Stmt::Return(Expr::Binary {
                op: syntax::BinOp::Gt,
                left: Box::new(field_ref(field, rng)),
                right: Box::new(Expr::IntLit(rng.gen_range(0..10))),
            })]
        }
        _ => {
            let rhs = match ints.first() {
                Some(p) => Expr::NameRef(p.clone()),
                None => Expr::IntLit(rng.gen_range(1..10)),
            };
            vec![Stmt::Return(Expr::Binary {
                op: syntax::BinOp::Add,
                left: Box::new(field_ref(field, rng)),
                right: Box::new(rhs),
            })]
        }
    }
}

/// A callable target method: non-private, non-abstract is not required (an
/// abstract method dispatches fine), but every parameter must be primitive
/// so the call site can pass literals.
fn pick_call_target(plans: &[ClassPlan], target: usize) -> Option<MethodPlan> {
    plans[target]
        .methods
        .iter()
        .find(|m| {
            m.visibility != Visibility::Private
                && m.params.iter().all(|p| matches!(p.type_name, TypeRef::Int | TypeRef::Boolean))
        })
        .cloned()
}

fn caller_body(
    m: &MethodPlan,
    plans: &[ClassPlan],
    target: usize,
    target_method: MethodPlan,
    rng: &mut impl Rng,
) -> Vec<Stmt> {
    let receiver_param = m
        .params
        .iter()
        .find(|p| p.type_name == TypeRef::Named(plans[target].name.clone()))
        .expect("caller plan carries a receiver parameter")
        .name
        .clone();
    let args: Vec<Expr> = target_method
        .params
        .iter()
        .map(|p| match p.type_name {
            TypeRef::Boolean => Expr::BoolLit(rng.gen_bool(0.5)),
            _ => Expr::IntLit(rng.gen_range(0..10)),
        })
        .collect();
    let call = Expr::Call {
        receiver: Some(Box::new(Expr::NameRef(receiver_param))),
        name: target_method.name.clone(),
        args,
    };
    match (&m.ret, &target_method.ret) {
        (ReturnType::Void, _) => vec![Stmt::ExprStmt(call)],
        (ReturnType::Type(TypeRef::Int), ReturnType::Type(TypeRef::Int)) => {
            vec![Stmt::Return(Expr::Binary {
                op: syntax::BinOp::Add,
                left: Box::new(call),
                right: Box::new(Expr::IntLit(rng.gen_range(1..10))),
            })]
        }
        (ReturnType::Type(TypeRef::Int), _) => vec![
            Stmt::ExprStmt(call),
            Stmt::Return(Expr::IntLit(rng.gen_range(0..10))),
        ],
        (ReturnType::Type(TypeRef::Boolean), ReturnType::Type(TypeRef::Boolean)) => {
            vec![Stmt::Return(call)]
        }
        (ReturnType::Type(TypeRef::Boolean), ReturnType::Type(TypeRef::Int)) => {
            vec![Stmt::Return(Expr::Binary {
                op: syntax::BinOp::Gt,
                left: Box::new(call),
                right: Box::new(Expr::IntLit(0)),
            })]
        }
        (ReturnType::Type(_), _) => vec![
            Stmt::ExprStmt(call),
            Stmt::Return(Expr::BoolLit(true)),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn generated_programs_resolve_and_fit_loc_window() {
        let config = GeneratorConfig::default();
        let (lo, hi) = config.accepted_loc();
        for seed in 0..50 {
            let units = generate_program(&config, &mut rng(seed)).unwrap();
            resolve(&units).unwrap();
            let loc = syntax::print(&units[0]).lines().count();
            assert!((lo..=hi).contains(&loc), "seed {seed}: loc {loc}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GeneratorConfig::default();
        let a = generate_program(&config, &mut rng(7)).unwrap();
        let b = generate_program(&config, &mut rng(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(syntax::print(&a[0]), syntax::print(&b[0]));
    }

    #[test]
    fn zero_inheritance_probability_yields_no_superclasses() {
        let config = GeneratorConfig {
            inheritance_probability: 0.0,
            ..GeneratorConfig::default()
        };
        for seed in 0..20 {
            let units = generate_program(&config, &mut rng(seed)).unwrap();
            assert!(units[0].classes.iter().all(|c| c.superclass.is_none()), "seed {seed}");
        }
    }

    #[test]
    fn single_class_config_produces_one_class() {
        let config = GeneratorConfig {
            classes_min: 1,
            classes_max: 1,
            target_loc_range: (6, 20),
            ..GeneratorConfig::default()
        };
        let units = generate_program(&config, &mut rng(3)).unwrap();
        assert_eq!(units[0].classes.len(), 1);
    }

    #[test]
    fn bodies_reference_state() {
        // Across a handful of seeds, at least one program must contain a
        // field access and at least one a cross-class call; otherwise the
        // corpus would never exercise detection-relevant dependencies.
        let config = GeneratorConfig::default();
        let mut saw_field_use = false;
        let mut saw_call = false;
        for seed in 0..30 {
            let text = syntax::print(&generate_program(&config, &mut rng(seed)).unwrap()[0]);
            saw_field_use |= text.contains("this.");
            saw_call |= text.contains("(") && text.contains(".m");
        }
        assert!(saw_field_use);
        assert!(saw_call);
    }

    #[test]
    fn round_trips_through_parser() {
        let config = GeneratorConfig::default();
        for seed in 0..30 {
            let units = generate_program(&config, &mut rng(seed)).unwrap();
            let text = syntax::print(&units[0]);
            let reparsed = syntax::parse(&text).unwrap();
            assert_eq!(reparsed, units[0], "seed {seed}");
        }
    }
}
