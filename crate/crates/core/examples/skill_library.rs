//! Retrieve skills by description, derive a variant, and dump the grown
//! library to disk and load it back.
//!
//! `cargo run --example skill_library`

use skirmish::skills::{bootstrap_library, synthesize_variant, SkillEdit, SkillLibrary};

fn main() -> anyhow::Result<()> {
    let mut library = bootstrap_library();
    let query = "focus fire with the other ranged units and back off from melee";
    for (skill, score) in library.retrieve(query, 3)? {
        println!("{score:.3}  {}", skill.skill_id);
    }

    let base = library.get("expert_ranged_kite").expect("bootstrapped").clone();
    let edit = SkillEdit::ScaleParam { name: "focus_base".into(), factor: 1.25 };
    let variant = synthesize_variant(&base, "commit harder to shared targets", &edit)?;
    println!("focus_base {} -> {}", base.params["focus_base"], variant.params["focus_base"]);
    let id = library.register(variant);
    println!("registered {id}; library has {} skills", library.len());

    let dir = tempfile::tempdir()?;
    library.dump_dir(dir.path())?;
    let reloaded = SkillLibrary::load_dir(dir.path())?;
    println!("reloaded {} skills, variant present: {}", reloaded.len(), reloaded.contains(&id));
    Ok(())
}
