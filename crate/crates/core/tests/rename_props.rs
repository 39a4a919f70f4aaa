mod common;

use accent::lang::Lang;
use common::{check_rename, rename_case};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rename_is_safe(
        python in any::<bool>(),
        seed in 0u64..5000,
        pick in 0usize..16,
        kind in any::<u8>(),
        fresh in "[a-zA-Z_][a-zA-Z0-9_]{0,8}",
    ) {
        let lang = if python { Lang::Python } else { Lang::Java };
        let (code, old, new) = rename_case(lang, seed, pick, kind, &fresh);
        if let Err(e) = check_rename(&code, &old, &new, lang) {
            return Err(TestCaseError::fail(format!("{old} -> {new}: {e}\n{code}")));
        }
    }
}

#[test]
fn comments_and_strings_are_untouched() {
    let (code, old, new) = rename_case(Lang::Java, 3, 0, 2, "renamedThing");
    let out = accent::lang::rename(&code, &old, &new, Lang::Java).unwrap();
    assert!(out.contains(&format!("// keeps {old} and \"{old}\"")));
}
