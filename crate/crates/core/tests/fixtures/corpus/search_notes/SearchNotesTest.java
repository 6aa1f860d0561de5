package com.example.notes.test;

import io.appium.java_client.MobileElement;
import io.appium.java_client.android.AndroidDriver;
import org.junit.Test;

public class SearchNotesTest {
    private AndroidDriver<MobileElement> driver;

    @Test
    public void testSearchNotes() {
        driver.findElementById("com.example.notes:id/btn_search").click();
        driver.findElementByXPath("/hierarchy/android.widget.FrameLayout/android.widget.LinearLayout").click();
        driver.findElementById("com.example.notes:id/btn_done").click();
    }
}
