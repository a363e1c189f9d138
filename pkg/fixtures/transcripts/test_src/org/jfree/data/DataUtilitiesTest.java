package org.jfree.data;

import junit.framework.TestCase;

public class DataUtilitiesTest extends TestCase {

    public void testGetCategoryCount() {
        DefaultKeyedValues values = new DefaultKeyedValues();
        values.addValue("A", 1.0);
        assertEquals(1, DataUtilities.getCategoryCount(values));
    }

    public void testGetCategoryIndex() {
        DefaultKeyedValues empty = new DefaultKeyedValues();
        // A missing category must report -1, not dereference the
        // backing store.
        assertEquals(-1, empty.getCategoryIndex("ABC"));
    }

    public void testGetCategoryTotal() {
        DefaultKeyedValues values = new DefaultKeyedValues();
        values.addValue("A", 2.0);
        assertEquals(2.0, DataUtilities.getCategoryTotal(values), 0.0);
    }
}
